#include "ttn/einsum.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace ttn {

namespace {

using SizeMap = std::map<int, std::size_t>;

struct Work {
  std::optional<DenseTensor> owned;
  const DenseTensor* ref = nullptr;
  std::vector<int> labels;

  const DenseTensor& tensor() const { return owned ? *owned : *ref; }
  double scalar() const { return tensor()[0]; }
  std::size_t size() const { return tensor().size(); }
};

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

// Sums out every label of `w` not in `keep`.
void reduce_unneeded(Work& w, const std::set<int>& keep) {
  std::vector<std::size_t> kept, dropped;
  for (std::size_t k = 0; k < w.labels.size(); ++k)
    (keep.count(w.labels[k]) ? kept : dropped).push_back(k);
  if (dropped.empty()) return;
  std::vector<std::size_t> perm = kept;
  perm.insert(perm.end(), dropped.begin(), dropped.end());
  const DenseTensor p = permute(w.tensor(), perm);
  std::size_t keep_size = 1;
  Dims dims;
  std::vector<int> labels;
  for (auto k : kept) {
    keep_size *= w.tensor().dim(k);
    dims.push_back(w.tensor().dim(k));
    labels.push_back(w.labels[k]);
  }
  if (dims.empty()) dims.push_back(1);
  DenseTensor r(dims);
  const std::size_t blocks = p.size() / keep_size;
  const double* src = p.data().data();
  double* dst = r.data().data();
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < keep_size; ++i) dst[i] += src[b * keep_size + i];
  w.owned = std::move(r);
  w.ref = nullptr;
  w.labels = std::move(labels);
}

Work contract_pair(const Work& a, const Work& b, const std::set<int>& keep, const SizeMap& sizes) {
  if (a.labels.empty() || b.labels.empty()) {
    const Work& s = a.labels.empty() ? a : b;
    const Work& o = a.labels.empty() ? b : a;
    Work r;
    r.owned = s.scalar() * o.tensor();
    r.labels = o.labels;
    return r;
  }
  std::vector<int> free_a, free_b, contracted, batch;
  for (int l : a.labels) {
    if (contains(b.labels, l))
      (keep.count(l) ? batch : contracted).push_back(l);
    else
      free_a.push_back(l);
  }
  for (int l : b.labels)
    if (!contains(a.labels, l)) free_b.push_back(l);

  auto positions = [](const std::vector<int>& labels, std::initializer_list<const std::vector<int>*> groups) {
    std::vector<std::size_t> perm;
    for (const auto* g : groups)
      for (int l : *g)
        perm.push_back(static_cast<std::size_t>(std::find(labels.begin(), labels.end(), l) - labels.begin()));
    return perm;
  };
  auto extent = [&](const std::vector<int>& g) {
    std::size_t e = 1;
    for (int l : g) e *= sizes.at(l);
    return e;
  };
  const auto pa = positions(a.labels, {&free_a, &contracted, &batch});
  const auto pb = positions(b.labels, {&contracted, &free_b, &batch});
  const DenseTensor ta = permute(a.tensor(), pa);
  const DenseTensor tb = permute(b.tensor(), pb);
  const std::size_t fa = extent(free_a), fb = extent(free_b), c = extent(contracted),
                    nb = extent(batch);

  Work r;
  for (auto* g : {&free_a, &free_b, &batch}) r.labels.insert(r.labels.end(), g->begin(), g->end());
  Dims dims;
  for (int l : r.labels) dims.push_back(sizes.at(l));
  if (dims.empty()) dims.push_back(1);
  DenseTensor out(dims);
  for (std::size_t k = 0; k < nb; ++k) {
    Eigen::Map<const Matrix> ma(ta.data().data() + k * fa * c, static_cast<Eigen::Index>(fa),
                                static_cast<Eigen::Index>(c));
    Eigen::Map<const Matrix> mb(tb.data().data() + k * c * fb, static_cast<Eigen::Index>(c),
                                static_cast<Eigen::Index>(fb));
    Eigen::Map<Matrix> mc(out.data().data() + k * fa * fb, static_cast<Eigen::Index>(fa),
                          static_cast<Eigen::Index>(fb));
    mc.noalias() = ma * mb;
  }
  r.owned = std::move(out);
  return r;
}

std::size_t result_size(const Work& a, const Work& b, const std::set<int>& keep_after,
                        const SizeMap& sizes) {
  std::size_t s = 1;
  for (int l : a.labels)
    if (!contains(b.labels, l) || keep_after.count(l)) s *= sizes.at(l);
  for (int l : b.labels)
    if (!contains(a.labels, l)) s *= sizes.at(l);
  return s;
}

}  // namespace

DenseTensor contract_network(std::span<const Operand> operands, std::span<const int> output) {
  if (operands.empty()) throw std::invalid_argument("contract_network: no operands");
  SizeMap sizes;
  std::vector<Work> work;
  for (const auto& op : operands) {
    if (op.tensor == nullptr) throw std::invalid_argument("contract_network: null operand");
    const bool scalar = op.labels.empty();
    if (!scalar && op.labels.size() != op.tensor->order())
      throw std::invalid_argument("contract_network: label count does not match tensor order");
    if (scalar && op.tensor->size() != 1)
      throw std::invalid_argument("contract_network: unlabeled operand must be a scalar");
    std::set<int> seen;
    for (std::size_t k = 0; k < op.labels.size(); ++k) {
      const int l = op.labels[k];
      if (!seen.insert(l).second)
        throw std::invalid_argument("contract_network: repeated label within one operand");
      auto [it, inserted] = sizes.emplace(l, op.tensor->dim(k));
      if (!inserted && it->second != op.tensor->dim(k))
        throw std::invalid_argument("contract_network: label " + std::to_string(l) +
                                    " has inconsistent sizes");
    }
    Work w;
    w.ref = op.tensor;
    w.labels = op.labels;
    work.push_back(std::move(w));
  }
  for (int l : output)
    if (!sizes.count(l))
      throw std::invalid_argument("contract_network: output label " + std::to_string(l) + " not present");

  auto keep_excluding = [&](std::size_t i, std::size_t j) {
    std::set<int> keep(output.begin(), output.end());
    for (std::size_t k = 0; k < work.size(); ++k)
      if (k != i && k != j) keep.insert(work[k].labels.begin(), work[k].labels.end());
    return keep;
  };

  for (std::size_t i = 0; i < work.size(); ++i) reduce_unneeded(work[i], keep_excluding(i, i));

  while (work.size() > 1) {
    std::size_t bi = 0, bj = 1;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < work.size(); ++i)
      for (std::size_t j = i + 1; j < work.size(); ++j) {
        bool shares = false;
        for (int l : work[i].labels) shares = shares || contains(work[j].labels, l);
        if (!shares) continue;
        const auto s = result_size(work[i], work[j], keep_excluding(i, j), sizes);
        if (!best || s < *best) {
          best = s;
          bi = i;
          bj = j;
        }
      }
    if (!best) {
      // Disconnected: outer product of the two smallest.
      std::vector<std::size_t> idx(work.size());
      for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t x, std::size_t y) { return work[x].size() < work[y].size(); });
      bi = std::min(idx[0], idx[1]);
      bj = std::max(idx[0], idx[1]);
    }
    const auto keep = keep_excluding(bi, bj);
    Work merged = contract_pair(work[bi], work[bj], keep, sizes);
    work.erase(work.begin() + static_cast<std::ptrdiff_t>(bj));
    work[bi] = std::move(merged);
  }

  Work& last = work.front();
  reduce_unneeded(last, std::set<int>(output.begin(), output.end()));
  if (output.empty()) {
    DenseTensor r({1});
    r[0] = last.tensor()[0];
    return r;
  }
  std::vector<std::size_t> perm;
  for (int l : output) {
    const auto it = std::find(last.labels.begin(), last.labels.end(), l);
    perm.push_back(static_cast<std::size_t>(it - last.labels.begin()));
  }
  if (last.owned) return permute(*last.owned, perm);
  return permute(*last.ref, perm);
}

}  // namespace ttn
