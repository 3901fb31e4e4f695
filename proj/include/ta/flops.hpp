#pragma once

#include <cstdint>

namespace ta {

// Multiply-add accumulator. One counter is active per run (thread-local);
// operations report their cost to whichever counter is active, if any.
//
// Instrumented costs (multiply-adds):
//   matmul (m x p)(p x n)          m*n*p
//   row_softmax (m x n)            3*m*n   (max-subtract, exp, normalize)
//   elementwise exp / scale / add  1 per element
//   depthwise conv (C,H,W), k x k  C*H*W*k*k
//   pointwise conv                 H*W*Cout*Cin
//   full conv (Cout,Cin,kh,kw)     Hout*Wout*Cout*Cin*kh*kw
//   channel layer norm             4*C*H*W
//   mean pool over positions       N*d
class FlopCounter {
 public:
  void add(std::uint64_t madds) {
    if (enabled_) madds_ += madds;
  }
  std::uint64_t multiply_adds() const { return madds_; }
  void reset() { madds_ = 0; }
  bool enabled() const { return enabled_; }
  void set_enabled(bool on) { enabled_ = on; }

 private:
  std::uint64_t madds_ = 0;
  bool enabled_ = true;
};

FlopCounter* active_flop_counter();

// RAII activation of a counter for the current thread. Nestable; the
// innermost scope wins and the previous counter is restored on exit.
class FlopScope {
 public:
  explicit FlopScope(FlopCounter& counter);
  ~FlopScope();
  FlopScope(const FlopScope&) = delete;
  FlopScope& operator=(const FlopScope&) = delete;

 private:
  FlopCounter* previous_;
};

inline void count_flops(std::uint64_t madds) {
  if (FlopCounter* c = active_flop_counter()) c->add(madds);
}

}  // namespace ta
