#pragma once

#include <memory>
#include <span>

#include "hypercol/classifiers.hpp"

namespace hypercol::detail {

// Runs fit(X') where X' is X or its z-scored copy, then attaches the scaler
// so prediction applies the same transform.
template <class Model, class Fit>
std::shared_ptr<const Model> fit_with_scaling(const PixelMatrix& X, const ClassifierConfig& cfg,
                                              Fit&& fit) {
  if (!cfg.standardize) return fit(X);
  FeatureScaler scaler = FeatureScaler::fit(X);
  PixelMatrix scaled = X;
  scaler.apply(scaled.data);
  std::shared_ptr<Model> model = fit(scaled);
  model->attach_scaler(std::move(scaler));
  return model;
}

inline double label_sign(std::uint8_t y) { return y != 0 ? 1.0 : -1.0; }

}  // namespace hypercol::detail
