#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <vector>

#include "metacog/errors.hpp"

namespace metacog::gp {

/// Covariance kernel over joint inputs. Either a squared-exponential
/// with per-coordinate (ARD) lengthscales acting on a coordinate block,
/// or a product of two kernels acting on their respective blocks.
class Kernel {
 public:
  Kernel() = default;

  /// SE kernel over coordinates [offset, offset + lengthscales.size()).
  static Kernel squared_exponential(Eigen::VectorXd lengthscales, double signal_variance,
                                    int offset = 0);
  static Kernel product(Kernel a, Kernel b);

  double operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

  /// Gram matrix of the rows of X.
  Eigen::MatrixXd gram(const Eigen::MatrixXd& X) const;

  /// Covariance vector [k(q, x_1), ..., k(q, x_L)] against the rows of X.
  Eigen::VectorXd covariance_vector(const Eigen::MatrixXd& X, const Eigen::VectorXd& q) const;

  /// Number of input coordinates the kernel consumes (highest block end).
  int min_input_dim() const;

  bool valid() const { return node_ != nullptr; }

  void serialize(std::ostream& os) const;
  static Kernel deserialize(std::istream& is);

 private:
  struct Node {
    bool is_product = false;
    // leaf
    Eigen::VectorXd lengthscales;
    double signal_variance = 1.0;
    int offset = 0;
    // product
    std::shared_ptr<const Node> left, right;
  };

  static double eval(const Node& n, const Eigen::VectorXd& u, const Eigen::VectorXd& v);
  static int dim_of(const Node& n);
  static void serialize_node(const Node& n, std::ostream& os);
  static std::shared_ptr<const Node> deserialize_node(std::istream& is);

  explicit Kernel(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace metacog::gp
