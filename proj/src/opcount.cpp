#include "sumis/opcount.hpp"

#include <cmath>

namespace sumis::ops {

Counter& counter() {
    thread_local Counter c;
    return c;
}

}  // namespace sumis::ops

namespace sumis {

namespace {

std::uint64_t ipow(std::uint64_t base, int e) {
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

}  // namespace

OpCount table_formula(const std::string& method, int nr, int nt, int ns, int m) {
    if (nr <= 0 || nt <= 0 || ns <= 0 || m <= 0)
        throw std::invalid_argument("table_formula: parameters must be positive");
    const std::uint64_t NR = nr, NT = nt, NS = ns, M = m;
    OpCount c;
    c.method = method;
    c.nr = nr;
    c.nt = nt;
    c.ns = ns;
    c.m = m;
    if (method == "sumis") {
        c.y_independent = NR * NT * NT + NT * NT * NT + 2 * NS * NS * NT * NT;
        c.y_dependent = NT * NT * NT + 2 * NR * NT + (2 * NS * NS + 6) * NT * NT;
    } else if (method == "pm") {
        c.y_independent = NR * NT * NT + NT * NT * NT;
        c.y_dependent = (2 * NT * NT * NT + 4 * NT * NT) * ipow(M, ns);
    } else if (method == "softMmse") {
        c.y_independent = NR * NT * NT + NT * NT * NT;
        c.y_dependent = 2 * NT * (NR + NT);
    } else if (method == "maxLog" || method == "exactLlr") {
        c.y_independent = 3 * NT * ipow(M, nt);
        c.y_dependent = NT * ipow(M, nt);
    } else {
        throw UnknownMethod("table_formula: unknown method '" + method + "'");
    }
    return c;
}

}  // namespace sumis
