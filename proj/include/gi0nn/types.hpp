#pragma once

#include <Eigen/Core>

namespace gi0nn {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Array = Eigen::ArrayXd;
using Array2D = Eigen::ArrayXXd;

// Intensity raster: rows index image height, cols index width.
using Raster = Array2D;

// Per-pixel roughness estimates, same layout as Raster.
using RoughnessMap = Array2D;

}  // namespace gi0nn
