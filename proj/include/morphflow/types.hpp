#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace morphflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. Everything user-facing derives from Error so the CLI can
// map failures to exit codes (usage/input -> 2, numerical -> 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class RowCountMismatch : public Error {
public:
    using Error::Error;
};

class FieldMismatch : public Error {
public:
    using Error::Error;
};

class DegenerateCovariance : public Error {
public:
    using Error::Error;
};

class DegenerateNeighborhood : public Error {
public:
    using Error::Error;
};

class Disconnected : public Error {
public:
    using Error::Error;
};

class OutOfHorizon : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class NonFiniteState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A sampled shape: one point per row, optional unit normals (same row count),
/// immutable by convention once built.
struct PointCloud {
    Matrix points;   // N x D
    Matrix normals;  // N x D when present, otherwise 0 x 0
    std::string id;

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
    bool has_normals() const { return normals.rows() > 0; }

    // Throws on a violated invariant (finite coordinates, unit normals, >= 1 point).
    void validate() const;
};

/// Point cloud plus connectivity: index triples in 3D, index pairs (polyline
/// segments) in 2D. Faces of higher arity are kept as parsed.
struct Mesh {
    PointCloud cloud;
    std::vector<std::vector<int>> faces;

    void validate() const;
};

struct SampleIndexSet {
    std::vector<int> indices;

    int count() const { return static_cast<int>(indices.size()); }
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace morphflow
