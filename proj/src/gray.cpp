#include "sumis/gray.hpp"

#include <cmath>
#include <numeric>

namespace sumis {

bool enumeration_guard_ok(int n_t, int m) {
    if (n_t < 1 || m < 2) return false;
    int bits_per_symbol = 0;
    while ((1 << bits_per_symbol) < m) ++bits_per_symbol;
    if ((1 << bits_per_symbol) != m) return false;
    return static_cast<long long>(n_t) * bits_per_symbol <= 24;
}

void require_enumeration_guard(int n_t, int m) {
    if (!enumeration_guard_ok(n_t, m))
        throw TooLarge("enumeration too large: nT * log2(M) must be <= 24");
}

GrayCounter::GrayCounter(int n, int m) : n_(n), m_(m), a_(n, 0), f_(n + 1), o_(n, 1) {
    if (n < 1 || m < 2) throw std::invalid_argument("GrayCounter: need n >= 1, m >= 2");
    std::iota(f_.begin(), f_.end(), 0);
}

bool GrayCounter::next(int& coord, int& delta) {
    const int j = f_[0];
    f_[0] = 0;
    if (j == n_) return false;
    a_[j] += o_[j];
    coord = j;
    delta = o_[j];
    if (a_[j] == 0 || a_[j] == m_ - 1) {
        o_[j] = -o_[j];
        f_[j] = f_[j + 1];
        f_[j + 1] = j + 1;
    }
    return true;
}

std::vector<std::vector<int>> enumerate_gray_order(int n_t, int m) {
    require_enumeration_guard(n_t, m);
    std::vector<std::vector<int>> out;
    GrayCounter g(n_t, m);
    out.push_back(g.digits());
    int coord, delta;
    while (g.next(coord, delta)) out.push_back(g.digits());
    return out;
}

}  // namespace sumis
