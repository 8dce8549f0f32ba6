#pragma once

#include "dspn/learn.hpp"

namespace dspn::learn {

// Per-class scores of KNN, LDA and GaussianNB models; sum to 1.
Posterior baseline_scores(const Model& model, std::span<const double> row);

}  // namespace dspn::learn
