#pragma once

#include "sloewner/data.hpp"
#include "sloewner/structure.hpp"
#include "sloewner/types.hpp"

namespace sloewner {

// Interpolatory projection bases for an explicit full-order model:
// column i of V solves K(sigma_i) v = B r_i, column i of W solves
// K(mu_i)^T w = C^T ell_i.
struct ProjectionBases {
  Matrix W;  // N x n
  Matrix V;  // N x n
};

ProjectionBases projection_bases(const FullModel& model,
                                 const InterpolationData& data);

// Structure-preserving projected model: A_k = W^T A_k V, B = W^T B, C = C V.
// Used as the independent oracle against the data-driven construction.
StructuredRealization project(const FullModel& model,
                              const ProjectionBases& bases);

}  // namespace sloewner
