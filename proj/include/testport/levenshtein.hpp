#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <iterator>
#include <numeric>
#include <vector>

namespace testport {

/// Unit-cost edit distance between two random-access sequences, with element
/// equality given by `eq`. Two rolling rows, O(|a|·|b|) time.
template <class SeqA, class SeqB, class Eq = std::equal_to<>>
std::size_t levenshtein_distance(const SeqA& a, const SeqB& b, Eq eq = {}) {
    const std::size_t n = std::size(a), m = std::size(b);
    if (n == 0) return m;
    if (m == 0) return n;

    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    auto ai = std::begin(a);
    for (std::size_t i = 1; i <= n; ++i, ++ai) {
        cur[0] = i;
        auto bj = std::begin(b);
        for (std::size_t j = 1; j <= m; ++j, ++bj) {
            const std::size_t subst = prev[j - 1] + (eq(*ai, *bj) ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

}  // namespace testport
