#pragma once

namespace rsr {

// Caps the worker count used by the data-parallel kernels. Kernels write each
// output slot from exactly one iteration, so results do not depend on it.
void set_num_threads(int n);
int num_threads();

class ScopedThreads {
public:
    explicit ScopedThreads(int n) : previous_(num_threads()) { set_num_threads(n); }
    ~ScopedThreads() { set_num_threads(previous_); }
    ScopedThreads(const ScopedThreads&) = delete;
    ScopedThreads& operator=(const ScopedThreads&) = delete;

private:
    int previous_;
};

}  // namespace rsr
