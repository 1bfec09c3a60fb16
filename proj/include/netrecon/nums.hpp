#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace netrecon {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Cached log-factorials. ensure_lfact(n) must be called once (single
// threaded) before concurrent use; lookups beyond the table fall back to
// lgamma, which is safe to call from any thread.
void ensure_lfact(size_t n);
double lfact(int64_t n);

double lbinom(int64_t n, int64_t k);
double lbinom(double n, double k);

// log of the double factorial of an even number, (2m)!! = 2^m m!
double ldfact_even(int64_t two_m);

// log multiset coefficient ((n, m)) = binom(n + m - 1, m)
double lmultiset(int64_t n, int64_t m);

double lbeta(double a, double b);

inline double safelog(double x) { return x > 0 ? std::log(x) : neg_inf; }

inline double log_sum_exp(double a, double b)
{
    if (a == neg_inf)
        return b;
    if (b == neg_inf)
        return a;
    if (a < b)
        std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

// dilogarithm Li2(x) for x in [0, 1]
double dilog(double x);

// ============================================================
// q(m, n): number of degree-count vectors summing to m with at
// most n nonzero parts, q(m,n) = q(m,n-1) + q(m-n,n).
// Exact (log-space DP) up to q_exact_limit; asymptotic beyond.
// ============================================================

constexpr int64_t q_exact_limit = 2000;

// log q(m, n); exact for m <= q_exact_limit
double log_q(int64_t m, int64_t n);

// exact integer value, valid while it fits in 64 bits (m <= 120 is
// always safe); used by tests against brute-force partition counting
uint64_t q_count_exact(int64_t m, int64_t n);

// thread-safe one-time construction of the DP table
void init_q_cache();

} // namespace netrecon
