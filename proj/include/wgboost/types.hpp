#pragma once

#include <Eigen/Dense>

namespace wgboost {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// N x d matrix whose row n is the n-th particle.
using ParticleSet = Matrix;

using VectorCRef = Eigen::Ref<const Vector>;
using VectorRef = Eigen::Ref<Vector>;
using MatrixRef = Eigen::Ref<Matrix>;

// Throws ContractError unless the set is non-empty and every entry finite.
void check_particles(const ParticleSet& particles);

} // namespace wgboost
