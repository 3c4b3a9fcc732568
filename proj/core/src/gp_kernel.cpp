#include "metacog/gp/kernel.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace metacog::gp {

Kernel Kernel::squared_exponential(Eigen::VectorXd lengthscales, double signal_variance, int offset) {
  if (lengthscales.size() == 0) throw ConfigError("SE kernel needs at least one lengthscale");
  if ((lengthscales.array() <= 0.0).any()) throw ConfigError("SE lengthscales must be positive");
  if (signal_variance <= 0.0) throw ConfigError("SE signal variance must be positive");
  if (offset < 0) throw ConfigError("SE coordinate offset must be non-negative");
  auto n = std::make_shared<Node>();
  n->lengthscales = std::move(lengthscales);
  n->signal_variance = signal_variance;
  n->offset = offset;
  return Kernel(std::move(n));
}

Kernel Kernel::product(Kernel a, Kernel b) {
  if (!a.valid() || !b.valid()) throw ConfigError("product kernel needs two factors");
  auto n = std::make_shared<Node>();
  n->is_product = true;
  n->left = a.node_;
  n->right = b.node_;
  return Kernel(std::move(n));
}

double Kernel::eval(const Node& n, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (n.is_product) return eval(*n.left, u, v) * eval(*n.right, u, v);
  const auto k = n.lengthscales.size();
  if (n.offset + k > u.size() || u.size() != v.size())
    throw DimensionError("kernel input dimension mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double d = (u[n.offset + i] - v[n.offset + i]) / n.lengthscales[i];
    s += d * d;
  }
  return n.signal_variance * std::exp(-0.5 * s);
}

int Kernel::dim_of(const Node& n) {
  if (n.is_product) return std::max(dim_of(*n.left), dim_of(*n.right));
  return n.offset + static_cast<int>(n.lengthscales.size());
}

double Kernel::operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  if (!node_) throw ConfigError("kernel not initialized");
  return eval(*node_, u, v);
}

Eigen::MatrixXd Kernel::gram(const Eigen::MatrixXd& X) const {
  const Eigen::Index L = X.rows();
  Eigen::MatrixXd K(L, L);
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = i; j < L; ++j) {
      K(i, j) = (*this)(X.row(i), X.row(j));
      K(j, i) = K(i, j);
    }
  }
  return K;
}

Eigen::VectorXd Kernel::covariance_vector(const Eigen::MatrixXd& X, const Eigen::VectorXd& q) const {
  Eigen::VectorXd k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) k[i] = (*this)(X.row(i), q);
  return k;
}

int Kernel::min_input_dim() const { return node_ ? dim_of(*node_) : 0; }

void Kernel::serialize_node(const Node& n, std::ostream& os) {
  if (n.is_product) {
    os << "product\n";
    serialize_node(*n.left, os);
    serialize_node(*n.right, os);
    return;
  }
  os << "se " << n.offset << " " << n.lengthscales.size() << " ";
  os.precision(17);
  for (Eigen::Index i = 0; i < n.lengthscales.size(); ++i) os << n.lengthscales[i] << " ";
  os << n.signal_variance << "\n";
}

void Kernel::serialize(std::ostream& os) const {
  if (!node_) throw ConfigError("cannot serialize uninitialized kernel");
  serialize_node(*node_, os);
}

std::shared_ptr<const Kernel::Node> Kernel::deserialize_node(std::istream& is) {
  std::string kind;
  if (!(is >> kind)) throw ConfigError("truncated kernel record");
  if (kind == "product") {
    auto n = std::make_shared<Node>();
    n->is_product = true;
    n->left = deserialize_node(is);
    n->right = deserialize_node(is);
    return n;
  }
  if (kind != "se") throw ConfigError("unknown kernel kind '" + kind + "'");
  auto n = std::make_shared<Node>();
  Eigen::Index k = 0;
  if (!(is >> n->offset >> k) || k <= 0) throw ConfigError("malformed SE kernel record");
  n->lengthscales.resize(k);
  for (Eigen::Index i = 0; i < k; ++i)
    if (!(is >> n->lengthscales[i])) throw ConfigError("truncated SE lengthscales");
  if (!(is >> n->signal_variance)) throw ConfigError("truncated SE variance");
  return n;
}

Kernel Kernel::deserialize(std::istream& is) { return Kernel(deserialize_node(is)); }

}  // namespace metacog::gp
