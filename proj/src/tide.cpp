#include "rewind/tide.hpp"

namespace rewind {

TideScore compute_tide(const AggregatedPlan& plan, const ActionChunk& fresh) {
    const ActionChunk& p = plan.values;
    if (p.batch() != fresh.batch())
        throw DimensionError("tide: batch mismatch " + std::to_string(p.batch()) + " vs " +
                             std::to_string(fresh.batch()));
    if (p.dims() != fresh.dims())
        throw DimensionError("tide: action-dim mismatch " + std::to_string(p.dims()) + " vs " +
                             std::to_string(fresh.dims()));
    if (fresh.horizon() < p.horizon())
        throw DimensionError("tide: chunk horizon " + std::to_string(fresh.horizon()) +
                             " shorter than plan overlap " + std::to_string(p.horizon()));

    double sum = 0.0;
    long cells = 0;
    for (int tau = 0; tau < p.horizon(); ++tau) {
        if (!plan.cell_valid(tau))
            continue;
        for (int b = 0; b < p.batch(); ++b) {
            for (int d = 0; d < p.dims(); ++d) {
                const double diff = p.at(b, tau, d) - fresh.at(b, tau, d);
                sum += diff * diff;
            }
        }
        cells += static_cast<long>(p.batch()) * p.dims();
    }

    TideScore score;
    score.valid = cells > 0;
    score.value = score.valid ? sum / static_cast<double>(cells) : 0.0;
    return score;
}

} // namespace rewind
