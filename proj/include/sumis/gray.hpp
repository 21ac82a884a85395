#ifndef SUMIS_GRAY_HPP
#define SUMIS_GRAY_HPP

#include <stdexcept>
#include <vector>

namespace sumis {

struct TooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Full enumeration is capped at 2^24 hypotheses.
bool enumeration_guard_ok(int n_t, int m);
void require_enumeration_guard(int n_t, int m);

// Loopless reflected mixed-radix Gray counter over {0..m-1}^n. Consecutive
// states differ in exactly one digit, and that digit moves by +/-1, which is
// what makes differential metric updates cheap.
class GrayCounter {
public:
    GrayCounter(int n, int m);

    const std::vector<int>& digits() const { return a_; }

    // Advance to the next state; reports which digit moved and by how much
    // (+1 or -1). Returns false once the sequence is exhausted.
    bool next(int& coord, int& delta);

private:
    int n_, m_;
    std::vector<int> a_;  // digits
    std::vector<int> f_;  // focus pointers
    std::vector<int> o_;  // per-digit direction
};

// Materialized sequence of all m^n digit vectors in Gray order.
std::vector<std::vector<int>> enumerate_gray_order(int n_t, int m);

}  // namespace sumis

#endif
