#pragma once

#include <famlies/engine.hpp>

#include <atomic>
#include <barrier>
#include <cstddef>
#include <new>
#include <thread>
#include <vector>

namespace famlies::engine::detail {

void note_allocation(std::size_t elems) noexcept;
void note_release(std::size_t elems) noexcept;

/// Aligned pack buffer whose element count is reported to the allocation accounting.
template <class T>
class PackBuffer {
  public:
    PackBuffer() = default;
    explicit PackBuffer(std::size_t n) : n_(n) {
        if (n_ == 0)
            return;
        data_ = static_cast<T *>(::operator new[](n_ * sizeof(T), std::align_val_t{64}));
        note_allocation(n_);
    }
    ~PackBuffer() { release(); }
    PackBuffer(PackBuffer &&o) noexcept : data_(o.data_), n_(o.n_) {
        o.data_ = nullptr;
        o.n_    = 0;
    }
    PackBuffer &operator=(PackBuffer &&o) noexcept {
        if (this != &o) {
            release();
            data_   = o.data_;
            n_      = o.n_;
            o.data_ = nullptr;
            o.n_    = 0;
        }
        return *this;
    }
    PackBuffer(const PackBuffer &)            = delete;
    PackBuffer &operator=(const PackBuffer &) = delete;

    T *data() const noexcept { return data_; }
    std::size_t size() const noexcept { return n_; }

  private:
    void release() noexcept {
        if (data_) {
            ::operator delete[](data_, std::align_val_t{64});
            note_release(n_);
        }
        data_ = nullptr;
    }
    T *data_       = nullptr;
    std::size_t n_ = 0;
};

/// Runs body(id, sync) on `ways` workers; worker 0 is the calling thread. sync() is a barrier
/// across the team (a no-op for a team of one).
template <class Body>
void run_team(int ways, Body &&body) {
    if (ways <= 1) {
        body(0, [] {});
        return;
    }
    std::barrier<> bar(ways);
    auto sync = [&bar] { bar.arrive_and_wait(); };
    {
        std::vector<std::jthread> workers;
        workers.reserve(std::size_t(ways - 1));
        for (int id = 1; id < ways; ++id)
            workers.emplace_back([&body, &sync, id] { body(id, sync); });
        body(0, sync);
    }
}

} // namespace famlies::engine::detail
