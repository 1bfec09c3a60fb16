#include "netrecon/nums.hpp"

#include <mutex>
#include <stdexcept>

namespace netrecon {

// ============================================================
// factorials and friends
// ============================================================

namespace {
std::vector<double> lfact_table{0.0, 0.0}; // lfact(0) = lfact(1) = 0
} // namespace

void ensure_lfact(size_t n)
{
    size_t old = lfact_table.size();
    if (n + 1 <= old)
        return;
    lfact_table.resize(n + 1);
    for (size_t i = old; i <= n; ++i)
        lfact_table[i] = lfact_table[i - 1] + std::log(double(i));
}

double lfact(int64_t n)
{
    if (n < 0)
        return neg_inf;
    if (size_t(n) < lfact_table.size())
        return lfact_table[size_t(n)];
    return std::lgamma(double(n) + 1.0);
}

double lbinom(int64_t n, int64_t k)
{
    if (k < 0 || k > n)
        return neg_inf;
    return lfact(n) - lfact(k) - lfact(n - k);
}

double lbinom(double n, double k)
{
    if (k < 0 || k > n)
        return neg_inf;
    return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

double ldfact_even(int64_t two_m)
{
    int64_t m = two_m / 2;
    return m * std::log(2.0) + lfact(m);
}

double lmultiset(int64_t n, int64_t m)
{
    if (m < 0)
        return neg_inf;
    if (m == 0)
        return 0.0;
    return lbinom(n + m - 1, m);
}

double lbeta(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// ============================================================
// dilogarithm, series + reflection
// ============================================================

double dilog(double x)
{
    if (x < 0 || x > 1)
        throw std::domain_error("dilog: argument outside [0,1]");
    if (x == 1)
        return M_PI * M_PI / 6;
    if (x > 0.5)
        return M_PI * M_PI / 6 - std::log(x) * std::log1p(-x) - dilog(1 - x);
    double sum = 0, term = x;
    for (int k = 1; k < 200; ++k)
    {
        double dS = term / (double(k) * k);
        sum += dS;
        term *= x;
        if (dS < 1e-17 * sum)
            break;
    }
    return sum;
}

// ============================================================
// q(m, n)
// ============================================================

namespace {

// triangular log-space table: q_tab[m][k] for 0 <= k <= min(m, m)
std::vector<std::vector<double>> q_tab;
std::once_flag q_once;

void build_q_cache()
{
    q_tab.resize(q_exact_limit + 1);
    q_tab[0] = {0.0}; // q(0, 0) = 1
    for (int64_t m = 1; m <= q_exact_limit; ++m)
    {
        auto& row = q_tab[m];
        row.resize(size_t(m) + 1);
        row[0] = neg_inf; // q(m, 0) = 0 for m > 0
        for (int64_t k = 1; k <= m; ++k)
        {
            double rest = (m - k >= 0) ? q_tab[m - k][std::min(k, m - k)] : neg_inf;
            row[k] = log_sum_exp(row[k - 1], rest);
        }
    }
}

// Asymptotics for partitions of m into at most n parts; the two regimes
// follow the standard saddle-point expansion, with v solving
// v = u sqrt(Li2(1 - e^-v)), u = n / sqrt(m).
double get_v(double u)
{
    double v = u;
    for (int it = 0; it < 10000; ++it)
    {
        double nv = u * std::sqrt(dilog(1 - std::exp(-v)));
        if (std::abs(nv - v) < 1e-12)
            return nv;
        v = nv;
    }
    return v;
}

double log_q_approx_small(int64_t m, int64_t n)
{
    // partitions of m into at most n parts with n << m^(1/4)
    return lbinom(m - 1, n - 1) - lfact(n);
}

double log_q_approx(int64_t m, int64_t n)
{
    if (n < std::pow(double(m), 0.25))
        return log_q_approx_small(m, n);
    double u = n / std::sqrt(double(m));
    double v = get_v(u);
    double lf = std::log(v) - std::log1p(-std::exp(-v) * (1 + u * u / 2)) / 2 -
                1.5 * std::log(2.0) - std::log(u) - std::log(M_PI);
    double g = 2 * v / u - u * std::log1p(-std::exp(-v));
    return lf - std::log(double(m)) + std::sqrt(double(m)) * g;
}

} // namespace

void init_q_cache()
{
    std::call_once(q_once, build_q_cache);
}

double log_q(int64_t m, int64_t n)
{
    if (m < 0 || n < 0)
        return neg_inf;
    if (m == 0)
        return 0.0;
    if (n == 0)
        return neg_inf;
    if (n > m)
        n = m;
    init_q_cache();
    if (m <= q_exact_limit)
        return q_tab[m][n];
    return log_q_approx(m, n);
}

uint64_t q_count_exact(int64_t m, int64_t n)
{
    if (m < 0 || n < 0)
        return 0;
    if (m == 0)
        return 1;
    if (n == 0)
        return 0;
    if (n > m)
        n = m;
    // small exact DP; grows row by row, overflow-checked by construction
    std::vector<std::vector<uint64_t>> tab(size_t(m) + 1);
    tab[0] = {1};
    for (int64_t mm = 1; mm <= m; ++mm)
    {
        tab[mm].resize(size_t(mm) + 1);
        tab[mm][0] = 0;
        for (int64_t k = 1; k <= mm; ++k)
        {
            uint64_t rest = (mm - k >= 0) ? tab[mm - k][std::min<int64_t>(k, mm - k)] : 0;
            uint64_t v = tab[mm][k - 1] + rest;
            if (v < tab[mm][k - 1])
                throw std::overflow_error("q_count_exact: 64-bit overflow");
            tab[mm][k] = v;
        }
    }
    return tab[m][n];
}

} // namespace netrecon
