#include "cva/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace cva {
namespace {

std::atomic<int> g_override{0};

int env_threads() {
    static const int value = [] {
        if (const char* env = std::getenv("CVA_THREADS")) {
            try {
                int n = std::stoi(env);
                if (n > 0) return n;
            } catch (...) {
            }
        }
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }();
    return value;
}

}  // namespace

int max_threads() {
    int o = g_override.load();
    return o > 0 ? o : env_threads();
}

void set_max_threads(int threads) { g_override.store(std::max(0, threads)); }

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = std::min(max_threads(), count);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + static_cast<int>(static_cast<long long>(count) * w / workers);
        const int hi = begin + static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cva
