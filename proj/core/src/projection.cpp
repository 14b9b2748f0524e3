#include "sloewner/projection.hpp"

#include "sloewner/errors.hpp"

namespace sloewner {

ProjectionBases projection_bases(const FullModel& model,
                                 const InterpolationData& data) {
  const Index N = model.order();
  ProjectionBases bases;
  bases.W.resize(N, data.n_left());
  bases.V.resize(N, data.n_right());

  for (Index i = 0; i < data.n_right(); ++i) {
    Complex s = data.right[i].sigma;
    Matrix K = model.kernel(s);
    Eigen::PartialPivLU<Matrix> lu(K);
    double rc = lu.rcond();
    if (!std::isfinite(rc) || rc < kSingularRcond) throw SingularKernel(s, rc);
    bases.V.col(i) = lu.solve(model.B() * data.right[i].r);
  }
  for (Index i = 0; i < data.n_left(); ++i) {
    Complex s = data.left[i].mu;
    Matrix Kt = model.kernel(s).transpose();
    Eigen::PartialPivLU<Matrix> lu(Kt);
    double rc = lu.rcond();
    if (!std::isfinite(rc) || rc < kSingularRcond) throw SingularKernel(s, rc);
    bases.W.col(i) = lu.solve(model.C().transpose() * data.left[i].ell);
  }
  return bases;
}

StructuredRealization project(const FullModel& model,
                              const ProjectionBases& bases) {
  if (bases.W.rows() != model.order() || bases.V.rows() != model.order())
    throw DataError("projection bases do not match the model dimension");

  std::vector<Matrix> A;
  for (int k = 0; k < model.structure().size(); ++k)
    A.push_back(bases.W.transpose() * model.A(k) * bases.V);
  Matrix B = bases.W.transpose() * model.B();
  Matrix C = model.C() * bases.V;
  return StructuredRealization(model.structure(), std::move(A), B, C);
}

}  // namespace sloewner
