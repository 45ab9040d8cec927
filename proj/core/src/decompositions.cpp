#include "tenexp/decompositions.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>

#include "tenexp/errors.hpp"

namespace tenexp {

namespace {

std::size_t rows_of(const Matrix& m) { return static_cast<std::size_t>(m.rows()); }
std::size_t cols_of(const Matrix& m) { return static_cast<std::size_t>(m.cols()); }

DenseTensor matrix_as_tensor(const Matrix& m, Shape shape) {
  return DenseTensor(std::move(shape), std::vector<double>(m.data(), m.data() + m.size()));
}

// A tensor whose modes carry integer labels; shared labels are contracted.
struct Labeled {
  DenseTensor t;
  std::vector<int> labels;
};

int phys_label(std::size_t m) { return static_cast<int>(m); }

int edge_label(std::size_t a, std::size_t b, std::size_t order) {
  if (a > b) std::swap(a, b);
  return static_cast<int>(order + a * order + b);
}

std::vector<int> fctn_core_labels(std::size_t n, std::size_t order) {
  std::vector<int> labels;
  for (std::size_t m = 0; m < n; ++m) labels.push_back(edge_label(m, n, order));
  labels.push_back(phys_label(n));
  for (std::size_t m = n + 1; m < order; ++m) labels.push_back(edge_label(n, m, order));
  return labels;
}

Labeled contract_labeled(const Labeled& a, const Labeled& b) {
  std::vector<std::size_t> modes_a;
  std::vector<std::size_t> modes_b;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const auto it = std::find(b.labels.begin(), b.labels.end(), a.labels[i]);
    if (it != b.labels.end()) {
      modes_a.push_back(i + 1);
      modes_b.push_back(static_cast<std::size_t>(it - b.labels.begin()) + 1);
    }
  }
  Labeled out;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (std::find(modes_a.begin(), modes_a.end(), i + 1) == modes_a.end()) {
      out.labels.push_back(a.labels[i]);
    }
  }
  for (std::size_t i = 0; i < b.labels.size(); ++i) {
    if (std::find(modes_b.begin(), modes_b.end(), i + 1) == modes_b.end()) {
      out.labels.push_back(b.labels[i]);
    }
  }
  if (modes_a.empty()) {
    // Outer product.
    Shape shape = a.t.shape();
    shape.insert(shape.end(), b.t.shape().begin(), b.t.shape().end());
    Matrix outer = Eigen::Map<const Vector>(a.t.data().data(), static_cast<Eigen::Index>(a.t.size())) *
                   Eigen::Map<const Vector>(b.t.data().data(), static_cast<Eigen::Index>(b.t.size())).transpose();
    out.t = matrix_as_tensor(outer, std::move(shape));
    return out;
  }
  out.t = tensor_contraction(a.t, b.t, modes_a, modes_b);
  return out;
}

DenseTensor arrange(const Labeled& l, const std::vector<int>& order) {
  std::vector<std::size_t> perm;
  for (int label : order) {
    const auto it = std::find(l.labels.begin(), l.labels.end(), label);
    if (it == l.labels.end()) throw ArgumentError("internal: missing contraction label");
    perm.push_back(static_cast<std::size_t>(it - l.labels.begin()) + 1);
  }
  return permute(l.t, perm);
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ArgumentError(message);
}

}  // namespace

std::string to_string(DecompositionKind kind) {
  switch (kind) {
    case DecompositionKind::tucker: return "tucker";
    case DecompositionKind::fctn: return "fctn";
    case DecompositionKind::tf: return "tf";
  }
  return "unknown";
}

DecompositionKind parse_decomposition_kind(const std::string& name) {
  if (name == "tucker") return DecompositionKind::tucker;
  if (name == "fctn") return DecompositionKind::fctn;
  if (name == "tf") return DecompositionKind::tf;
  throw ArgumentError("unknown decomposition kind '" + name + "'");
}

DecompositionKind CandidateDecomposition::kind() const {
  return static_cast<DecompositionKind>(factors.index());
}

FctnRanks::FctnRanks(std::size_t order, std::size_t fill)
    : order_(order), table_(order * order, fill) {}

std::size_t FctnRanks::get(std::size_t a, std::size_t b) const {
  require(a < order_ && b < order_ && a != b, "FCTN rank index out of range");
  return table_[a * order_ + b];
}

void FctnRanks::set(std::size_t a, std::size_t b, std::size_t value) {
  require(a < order_ && b < order_ && a != b, "FCTN rank index out of range");
  require(value >= 1, "FCTN ranks must be at least 1");
  table_[a * order_ + b] = value;
  table_[b * order_ + a] = value;
}

void validate(const CPFactors& f) {
  require(!f.factors.empty(), "CP factors must not be empty");
  const auto r = f.factors.front().cols();
  require(r >= 1, "CP rank must be at least 1");
  for (const auto& h : f.factors) {
    require(h.cols() == r, "CP factor matrices must share one column count");
    require(h.rows() >= 1, "CP factor matrices must have at least one row");
  }
}

void validate(const TuckerFactors& f) {
  require(f.factors.size() == f.core.order(), "Tucker factor count must equal core order");
  for (std::size_t n = 0; n < f.factors.size(); ++n) {
    require(cols_of(f.factors[n]) == f.core.shape()[n],
            "Tucker factor " + std::to_string(n + 1) + " column count does not match core");
    require(f.factors[n].rows() >= 1, "Tucker factors must have at least one row");
  }
}

void validate(const TTFactors& f) {
  require(f.head.rows() >= 1 && f.head.cols() >= 1, "TT head must be non-empty");
  std::size_t r = cols_of(f.head);
  for (const auto& core : f.cores) {
    require(core.order() == 3, "TT cores must be third-order");
    require(core.shape()[0] == r, "TT rank chain is broken");
    r = core.shape()[2];
  }
  require(rows_of(f.tail) == r, "TT tail does not match the last rank");
  require(f.tail.cols() >= 1, "TT tail must be non-empty");
}

void validate(const TRFactors& f) {
  require(!f.cores.empty(), "TR cores must not be empty");
  for (std::size_t n = 0; n < f.cores.size(); ++n) {
    require(f.cores[n].order() == 3, "TR cores must be third-order");
    const auto& next = f.cores[(n + 1) % f.cores.size()];
    require(f.cores[n].shape()[2] == next.shape()[0], "TR rank chain does not close");
  }
}

Shape fctn_core_shape(const FctnRanks& ranks, const Shape& target, std::size_t n) {
  Shape shape;
  for (std::size_t m = 0; m < n; ++m) shape.push_back(ranks.get(m, n));
  shape.push_back(target[n]);
  for (std::size_t m = n + 1; m < target.size(); ++m) shape.push_back(ranks.get(n, m));
  return shape;
}

Shape fctn_target_shape(const FCTNFactors& f) {
  Shape shape;
  for (std::size_t n = 0; n < f.cores.size(); ++n) {
    require(f.cores[n].order() == f.cores.size(), "FCTN core order must equal the number of cores");
    shape.push_back(f.cores[n].shape()[n]);
  }
  return shape;
}

void validate(const FCTNFactors& f) {
  require(f.cores.size() >= 2, "FCTN needs at least two cores");
  require(f.ranks.order() == f.cores.size(), "FCTN rank table order mismatch");
  const Shape target = fctn_target_shape(f);
  for (std::size_t n = 0; n < f.cores.size(); ++n) {
    require(f.cores[n].shape() == fctn_core_shape(f.ranks, target, n),
            "FCTN core " + std::to_string(n + 1) + " shape disagrees with the rank table");
  }
}

void validate(const TFFactors& f) {
  require(f.a_hat.order() == 3 && f.b_hat.order() == 3, "TF factors must be third-order");
  require(f.a_hat.shape()[1] == f.b_hat.shape()[0], "TF tubal ranks of A and B differ");
  require(f.a_hat.shape()[2] == f.b_hat.shape()[2], "TF slice counts of A and B differ");
  require(cols_of(f.transform) == f.a_hat.shape()[2], "TF transform column count must equal l");
  require(f.transform.rows() >= 1, "TF transform must have at least one row");
}

namespace {

Shape payload_shape(const CandidateDecomposition& c) {
  return std::visit(
      [](const auto& f) -> Shape {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TuckerFactors>) {
          Shape s;
          for (const auto& h : f.factors) s.push_back(rows_of(h));
          return s;
        } else if constexpr (std::is_same_v<T, FCTNFactors>) {
          return fctn_target_shape(f);
        } else {
          return {f.a_hat.shape()[0], f.b_hat.shape()[1], rows_of(f.transform)};
        }
      },
      c.factors);
}

}  // namespace

void validate(const CandidateDecomposition& c) {
  std::visit([](const auto& f) { validate(f); }, c.factors);
  require(payload_shape(c) == c.target_shape, "candidate composes to a shape other than its target");
}

DenseTensor cp_compose(const CPFactors& f) {
  validate(f);
  const std::size_t order = f.factors.size();
  Shape shape;
  for (const auto& h : f.factors) shape.push_back(rows_of(h));
  if (order == 1) {
    return matrix_as_tensor(f.factors[0].rowwise().sum(), shape);
  }
  // Khatri-Rao product of H_2..H_N with row index (i_2, ..., i_N) in row-major order.
  Matrix kr = f.factors[order - 1];
  for (std::size_t n = order - 1; n-- > 1;) {
    const Matrix& h = f.factors[n];
    Matrix next(h.rows() * kr.rows(), h.cols());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      next.middleRows(i * kr.rows(), kr.rows()) = kr.array().rowwise() * h.row(i).array();
    }
    kr = std::move(next);
  }
  const Matrix x = f.factors[0] * kr.transpose();
  return matrix_as_tensor(x, shape);
}

DenseTensor tucker_compose(const TuckerFactors& f) {
  validate(f);
  DenseTensor x = f.core;
  for (std::size_t n = 0; n < f.factors.size(); ++n) x = mode_n_product(x, f.factors[n], n + 1);
  return x;
}

DenseTensor tt_compose(const TTFactors& f) {
  validate(f);
  Shape shape{rows_of(f.head)};
  Matrix chain = f.head;
  for (const auto& core : f.cores) {
    const std::size_t r_in = core.shape()[0];
    const std::size_t i_n = core.shape()[1];
    const std::size_t r_out = core.shape()[2];
    const Matrix prod = chain * core.as_matrix(r_in, i_n * r_out);
    chain = Eigen::Map<const Matrix>(prod.data(), prod.rows() * static_cast<Eigen::Index>(i_n),
                                     static_cast<Eigen::Index>(r_out));
    shape.push_back(i_n);
  }
  shape.push_back(cols_of(f.tail));
  return matrix_as_tensor(chain * f.tail, shape);
}

DenseTensor tr_compose(const TRFactors& f) {
  validate(f);
  const std::size_t r0 = f.cores.front().shape()[0];
  Shape shape;
  // chain rows index (r_0, i_1, ..., i_n); columns index r_{n+1}.
  Matrix chain = Matrix::Identity(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(r0));
  for (const auto& core : f.cores) {
    const std::size_t r_in = core.shape()[0];
    const std::size_t i_n = core.shape()[1];
    const std::size_t r_out = core.shape()[2];
    const Matrix prod = chain * core.as_matrix(r_in, i_n * r_out);
    chain = Eigen::Map<const Matrix>(prod.data(), prod.rows() * static_cast<Eigen::Index>(i_n),
                                     static_cast<Eigen::Index>(r_out));
    shape.push_back(i_n);
  }
  const std::size_t inner = static_cast<std::size_t>(chain.rows()) / r0;
  std::vector<double> data(inner, 0.0);
  for (std::size_t r = 0; r < r0; ++r) {
    for (std::size_t i = 0; i < inner; ++i) {
      data[i] += chain(static_cast<Eigen::Index>(r * inner + i), static_cast<Eigen::Index>(r));
    }
  }
  return DenseTensor(shape, std::move(data));
}

DenseTensor fctn_compose(const FCTNFactors& f) {
  validate(f);
  const std::size_t order = f.cores.size();
  Labeled acc{f.cores[0], fctn_core_labels(0, order)};
  for (std::size_t n = 1; n < order; ++n) {
    acc = contract_labeled(acc, Labeled{f.cores[n], fctn_core_labels(n, order)});
  }
  std::vector<int> target;
  for (std::size_t n = 0; n < order; ++n) target.push_back(phys_label(n));
  return arrange(acc, target);
}

DenseTensor fctn_contract_except(const FCTNFactors& f, std::size_t skip) {
  validate(f);
  const std::size_t order = f.cores.size();
  require(skip < order, "FCTN core index out of range");
  std::optional<Labeled> acc;
  for (std::size_t n = 0; n < order; ++n) {
    if (n == skip) continue;
    Labeled core{f.cores[n], fctn_core_labels(n, order)};
    acc = acc ? contract_labeled(*acc, core) : core;
  }
  std::vector<int> target;
  for (std::size_t m = 0; m < order; ++m) {
    if (m != skip) target.push_back(phys_label(m));
  }
  for (std::size_t m = 0; m < order; ++m) {
    if (m != skip) target.push_back(edge_label(skip, m, order));
  }
  return arrange(*acc, target);
}

DenseTensor tf_compose(const TFFactors& f) {
  validate(f);
  return mode_n_product(facewise_product(f.a_hat, f.b_hat), f.transform, 3);
}

DenseTensor compose(const CandidateDecomposition& c) {
  return std::visit(
      [](const auto& f) -> DenseTensor {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TuckerFactors>) {
          return tucker_compose(f);
        } else if constexpr (std::is_same_v<T, FCTNFactors>) {
          return fctn_compose(f);
        } else {
          return tf_compose(f);
        }
      },
      c.factors);
}

TuckerFactors embed_cp_in_tucker(const CPFactors& cp) {
  validate(cp);
  const std::size_t r = cols_of(cp.factors.front());
  const std::size_t order = cp.factors.size();
  DenseTensor core(Shape(order, r));
  std::size_t diagonal_step = 0;
  for (std::size_t n = 0; n < order; ++n) diagonal_step = diagonal_step * r + 1;
  for (std::size_t i = 0; i < r; ++i) core[i * diagonal_step] = 1.0;
  return TuckerFactors{std::move(core), cp.factors};
}

TRFactors embed_tt_in_tr(const TTFactors& tt) {
  validate(tt);
  TRFactors tr;
  tr.cores.push_back(matrix_as_tensor(tt.head, {1, rows_of(tt.head), cols_of(tt.head)}));
  for (const auto& core : tt.cores) tr.cores.push_back(core);
  tr.cores.push_back(matrix_as_tensor(tt.tail, {rows_of(tt.tail), cols_of(tt.tail), 1}));
  return tr;
}

FCTNFactors embed_tt_in_fctn(const TTFactors& tt) {
  validate(tt);
  const std::size_t order = tt.cores.size() + 2;
  Shape target{rows_of(tt.head)};
  for (const auto& core : tt.cores) target.push_back(core.shape()[1]);
  target.push_back(cols_of(tt.tail));

  FCTNFactors out{{}, FctnRanks(order, 1)};
  out.ranks.set(0, 1, cols_of(tt.head));
  for (std::size_t n = 0; n < tt.cores.size(); ++n) out.ranks.set(n + 1, n + 2, tt.cores[n].shape()[2]);

  out.cores.push_back(matrix_as_tensor(tt.head, fctn_core_shape(out.ranks, target, 0)));
  for (std::size_t n = 0; n < tt.cores.size(); ++n) {
    out.cores.push_back(tt.cores[n].reshaped(fctn_core_shape(out.ranks, target, n + 1)));
  }
  out.cores.push_back(matrix_as_tensor(tt.tail, fctn_core_shape(out.ranks, target, order - 1)));
  return out;
}

FCTNFactors embed_tr_in_fctn(const TRFactors& tr) {
  validate(tr);
  const std::size_t order = tr.cores.size();
  require(order >= 3, "TR to FCTN embedding requires order at least 3");
  Shape target;
  for (const auto& core : tr.cores) target.push_back(core.shape()[1]);

  FCTNFactors out{{}, FctnRanks(order, 1)};
  for (std::size_t n = 0; n + 1 < order; ++n) out.ranks.set(n, n + 1, tr.cores[n].shape()[2]);
  out.ranks.set(0, order - 1, tr.cores[0].shape()[0]);

  for (std::size_t n = 0; n < order; ++n) {
    const Shape shape = fctn_core_shape(out.ranks, target, n);
    if (n == 0) {
      // (R_1, I_1, R_2) -> (I_1, R_2, R_1) with unit edges in between.
      const std::size_t perm[] = {2, 3, 1};
      out.cores.push_back(permute(tr.cores[n], perm).reshaped(shape));
    } else if (n == order - 1) {
      // (R_N, I_N, R_1) -> (R_1, R_N, I_N).
      const std::size_t perm[] = {3, 1, 2};
      out.cores.push_back(permute(tr.cores[n], perm).reshaped(shape));
    } else {
      out.cores.push_back(tr.cores[n].reshaped(shape));
    }
  }
  return out;
}

EmbeddedFactors special_case_embedding(const EmbeddingSource& source, EmbeddingTarget target) {
  if (const auto* cp = std::get_if<CPFactors>(&source)) {
    if (target == EmbeddingTarget::tucker) return embed_cp_in_tucker(*cp);
  } else if (const auto* tt = std::get_if<TTFactors>(&source)) {
    if (target == EmbeddingTarget::tr) return embed_tt_in_tr(*tt);
    if (target == EmbeddingTarget::fctn) return embed_tt_in_fctn(*tt);
  } else if (const auto* tr = std::get_if<TRFactors>(&source)) {
    if (target == EmbeddingTarget::fctn) return embed_tr_in_fctn(*tr);
  }
  throw ArgumentError("unsupported embedding pair");
}

std::size_t param_count(const CandidateDecomposition& c) {
  validate(c);
  return std::visit(
      [](const auto& f) -> std::size_t {
        using T = std::decay_t<decltype(f)>;
        std::size_t count = 0;
        if constexpr (std::is_same_v<T, TuckerFactors>) {
          count = f.core.size();
          for (const auto& h : f.factors) count += static_cast<std::size_t>(h.size());
        } else if constexpr (std::is_same_v<T, FCTNFactors>) {
          for (const auto& g : f.cores) count += g.size();
        } else {
          count = f.a_hat.size() + f.b_hat.size() + static_cast<std::size_t>(f.transform.size());
        }
        return count;
      },
      c.factors);
}

}  // namespace tenexp
