#pragma once

#include <iosfwd>
#include <string>

#include "ta/tensor.hpp"

namespace ta {

// Flat binary tensor format used for fixtures and checkpoints:
//   magic "TNSR", u32 rank, u32 dims..., then 64-bit reals.
// All integers and reals little-endian.

void dump_tensor(std::ostream& os, const Tensor& t);
Tensor load_tensor(std::istream& is);

void dump_tensor_file(const std::string& path, const Tensor& t);
Tensor load_tensor_file(const std::string& path);

// Size in bytes of the serialized record.
std::size_t tensor_record_size(const Tensor& t);

}  // namespace ta
