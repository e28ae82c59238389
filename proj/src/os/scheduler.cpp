#include "hvm/os/scheduler.hpp"

#include "hvm/core/error.hpp"

namespace hvm::os {

Scheduler::Scheduler(std::vector<Pid> pids, Cycles quantum)
    : queue_(std::move(pids)), quantum_(quantum), next_switch_(quantum) {
    if (queue_.empty()) throw ConfigError("scheduler needs at least one process");
}

Pid Scheduler::current() const {
    if (queue_.empty()) throw StateError("no runnable process");
    return queue_[pos_];
}

bool Scheduler::tick(Cycles now) {
    if (quantum_ == 0 || now < next_switch_) return false;
    next_switch_ = (now / quantum_ + 1) * quantum_;
    if (queue_.size() < 2) return false;
    pos_ = (pos_ + 1) % queue_.size();
    ++switches_;
    return true;
}

bool Scheduler::retire() {
    if (queue_.empty()) return false;
    queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(pos_));
    if (queue_.empty()) return false;
    pos_ %= queue_.size();
    return true;
}

}  // namespace hvm::os
