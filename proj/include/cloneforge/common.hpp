#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cloneforge {

/// Raised when a computation would exceed a configured size cap.
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when two routes that must agree by construction disagree.
/// Hitting this means the library itself is wrong, not the caller.
struct consistency_error : std::logic_error {
    using std::logic_error::logic_error;
};

namespace detail {

inline bool is_prime(long long n) {
    if (n < 2) return false;
    for (long long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

inline std::size_t ipow(std::size_t base, unsigned exp) {
    std::size_t r = 1;
    while (exp--) r *= base;
    return r;
}

/// Number of positive divisors, by trial division.
inline int divisor_count(long long n) {
    if (n <= 0) return 0;
    int count = 0;
    for (long long d = 1; d * d <= n; ++d) {
        if (n % d == 0) {
            count += 2;
            if (d * d == n) --count;
        }
    }
    return count;
}

/// FNV-1a over a byte string; used for stable canonical ids.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace detail

inline constexpr long long kDefaultProductCap = 35;

/// Product cap for (p, q); CLONEFORGE_MAX_PRODUCT overrides the default.
inline long long max_product_cap() {
    if (const char* env = std::getenv("CLONEFORGE_MAX_PRODUCT")) {
        char* end = nullptr;
        long long v = std::strtoll(env, &end, 10);
        if (end != env && v >= 6) return v;
    }
    return kDefaultProductCap;
}

/// Ordered pair of distinct primes (p, q). Order matters: functions studied
/// here map Z_p^n x Z_q^n to Z_p x Z_q, and swapping the primes swaps the
/// two coordinate roles everywhere.
struct PrimePair {
    int p = 0;
    int q = 0;

    long long product() const { return static_cast<long long>(p) * q; }

    static PrimePair make(int p, int q, long long cap = -1) {
        if (cap < 0) cap = max_product_cap();
        if (!detail::is_prime(p) || !detail::is_prime(q))
            throw std::invalid_argument("PrimePair: p and q must be prime");
        if (p == q) throw std::invalid_argument("PrimePair: p and q must be distinct");
        if (static_cast<long long>(p) * q > cap)
            throw resource_error("PrimePair: p*q exceeds the product cap");
        return PrimePair{p, q};
    }

    PrimePair swapped() const { return PrimePair{q, p}; }

    auto operator<=>(const PrimePair&) const = default;
};

/// Worker count used by the chunked loops below; 1 keeps everything on the
/// calling thread. Results are merged positionally, so the output never
/// depends on this setting.
inline int& worker_count() {
    static int jobs = 1;
    return jobs;
}

namespace detail {

/// Applies fn(i) for i in [0, n); chunks across worker_count() threads.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    int jobs = std::max(1, worker_count());
    if (jobs == 1 || n < 2 * static_cast<std::size_t>(jobs)) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + static_cast<std::size_t>(jobs) - 1) / static_cast<std::size_t>(jobs);
    for (int t = 0; t < jobs; ++t) {
        std::size_t lo = static_cast<std::size_t>(t) * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

}  // namespace cloneforge
