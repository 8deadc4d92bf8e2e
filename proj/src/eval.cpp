#include "kgr/eval.hpp"

namespace kgr {

double rank_of(std::span<const double> scores, EntityId label,
               const std::unordered_set<EntityId>& filter) {
    if (filter.contains(label)) throw std::invalid_argument("rank_of: label is filtered out");
    const double s_label = scores[label];
    int64_t better = 0, ties = 0;
    for (size_t e = 0; e < scores.size(); ++e) {
        if (static_cast<EntityId>(e) == label || filter.contains(static_cast<EntityId>(e)))
            continue;
        if (scores[e] > s_label) ++better;
        else if (scores[e] == s_label) ++ties;
    }
    return static_cast<double>(better) + static_cast<double>(ties) / 2.0 + 1.0;
}

}  // namespace kgr
