#include "ta/flops.hpp"

namespace ta {

namespace {
thread_local FlopCounter* g_active = nullptr;
}

FlopCounter* active_flop_counter() { return g_active; }

FlopScope::FlopScope(FlopCounter& counter) : previous_(g_active) { g_active = &counter; }

FlopScope::~FlopScope() { g_active = previous_; }

}  // namespace ta
