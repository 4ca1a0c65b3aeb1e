#include "nsfde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace nsfde {

int resolve_threads(int requested) {
    int n = requested;
    if (n <= 0) {
        if (const char* env = std::getenv("NSFDE_THREADS")) {
            n = std::atoi(env);
        }
    }
    if (n <= 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
    }
    return std::clamp(n, 1, 64);
}

void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    if (n <= 0) return;
    threads = std::clamp<long>(threads, 1, n);
    if (threads == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<long> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    long first_error_index = std::numeric_limits<long>::max();

    auto worker = [&]() {
        for (;;) {
            const long i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nsfde
