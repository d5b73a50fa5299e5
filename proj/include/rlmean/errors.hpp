#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rlmean {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A matrix that must have full column rank does not; the projection onto
/// the manifold is not unique.
class RankDeficient : public Error {
public:
  using Error::Error;
};

/// The structured linear system behind an inverse retraction is singular.
class Unsolvable : public Error {
public:
  using Error::Error;
};

/// An iterative kernel ran out of iterations.
class NoConvergence : public Error {
public:
  using Error::Error;
};

/// The k-th and (k+1)-th eigenvalues coincide, so the Grassmann projection
/// is not unique.
class EigenGapDegenerate : public Error {
public:
  using Error::Error;
};

/// Two subspaces have a right principal angle; the Grassmann logarithm is
/// undefined.
class CutLocus : public Error {
public:
  using Error::Error;
};

/// A lifting failed inside a barycenter iteration. Carries the index of the
/// offending sample.
class LiftingFailure : public Error {
public:
  LiftingFailure(std::size_t sample_index, const std::string &what)
      : Error("lifting of sample " + std::to_string(sample_index) +
              " failed: " + what),
        sample_index_(sample_index) {}

  std::size_t sample_index() const noexcept { return sample_index_; }

private:
  std::size_t sample_index_;
};

} // namespace rlmean
