#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ragx {

// Runs fn(0..n-1) on at most `parallelism` threads. If any call throws, the
// exception of the lowest failing index is rethrown after all threads finish.
inline void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn) {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Memoizes one computation per key; concurrent callers for the same key
// wait on the first caller's result.
template <typename T>
class ResultCache {
public:
    template <typename Fn>
    T get_or_compute(const std::string& key, Fn&& compute) {
        std::shared_future<T> future;
        std::promise<T> promise;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            auto it = entries_.find(key);
            if (it == entries_.end()) {
                future = promise.get_future().share();
                entries_.emplace(key, future);
                owner = true;
            } else {
                future = it->second;
            }
        }
        if (owner) {
            ++misses_;
            try {
                promise.set_value(compute());
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return future.get();
    }

    std::size_t misses() const noexcept { return misses_; }

private:
    std::mutex mutex_;
    std::map<std::string, std::shared_future<T>> entries_;
    std::atomic<std::size_t> misses_{0};
};

}  // namespace ragx
