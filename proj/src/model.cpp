#include "idskit/learners.hpp"

namespace idskit {

std::size_t argmax_lowest(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

std::vector<int> argmax_rows(const Matrix& proba) {
    std::vector<int> out(proba.rows());
    for (std::size_t r = 0; r < proba.rows(); ++r)
        out[r] = static_cast<int>(argmax_lowest(proba.row(r)));
    return out;
}

std::vector<int> Model::predict(const Matrix& X) const { return argmax_rows(predict_proba(X)); }

}  // namespace idskit
