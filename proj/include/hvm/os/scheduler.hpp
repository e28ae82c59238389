#pragma once

#include <cstdint>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm::os {

/// Round-robin time slicing over the processes that still have work.
/// A quantum of 0 runs each process to completion in order.
class Scheduler {
public:
    Scheduler(std::vector<Pid> pids, Cycles quantum);

    bool done() const { return queue_.empty(); }
    Pid current() const;

    /// Called once the current process has run up to `now`. Returns true when
    /// a quantum boundary passed and another process takes over.
    bool tick(Cycles now);
    /// The current process ran out of work. Returns false when none is left.
    bool retire();

    /// Switches caused by quantum expiry.
    std::uint64_t switches() const { return switches_; }
    Cycles quantum() const { return quantum_; }

private:
    std::vector<Pid> queue_;
    std::size_t pos_ = 0;
    Cycles quantum_;
    Cycles next_switch_;
    std::uint64_t switches_ = 0;
};

}  // namespace hvm::os
