//===- Executor.cpp -------------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The interleaving decisions (context assignment, seeded shuffles) are
// computed once as a step list, independent of the value domain; the exact
// integer machine and the informational floating-point machine replay the
// same steps.
//
//===----------------------------------------------------------------------===//

#include "polyred/Executor.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace polyred {

int64_t MemoryState::inputValue(uint64_t seed, const std::string &array,
                                const std::vector<int64_t> &index) {
  uint64_t h = seed * 0x9e3779b97f4a7c15ull;
  for (char c : array)
    h = (h ^ static_cast<uint64_t>(c)) * 0x100000001b3ull;
  for (int64_t v : index)
    h = (h ^ static_cast<uint64_t>(v + 0x7fff)) * 0x100000001b3ull;
  h ^= h >> 33;
  return static_cast<int64_t>(h % 101) - 50; // values in [-50, 50]
}

int64_t MemoryState::read(const std::string &array,
                          const std::vector<int64_t> &index) const {
  auto arrIt = values_.find(array);
  if (arrIt != values_.end()) {
    auto it = arrIt->second.find(index);
    if (it != arrIt->second.end())
      return it->second;
  }
  return inputValue(seed_, array, index);
}

void MemoryState::write(const std::string &array,
                        const std::vector<int64_t> &index, int64_t value) {
  values_[array][index] = value;
}

bool MemoryState::equals(const MemoryState &other) const {
  return diff(other).empty();
}

std::vector<std::string> MemoryState::diff(const MemoryState &other) const {
  assert(seed_ == other.seed_ && "states with different inputs never compare");
  std::vector<std::string> out;
  auto compareOver = [&](const MemoryState &a, const MemoryState &b) {
    for (const auto &[array, cells] : a.values_) {
      for (const auto &[index, value] : cells) {
        (void)value;
        if (a.read(array, index) != b.read(array, index)) {
          std::ostringstream os;
          os << array;
          for (int64_t v : index)
            os << "[" << v << "]";
          os << ": " << read(array, index) << " vs " << other.read(array, index);
          out.push_back(os.str());
        }
      }
    }
  };
  compareOver(*this, other);
  compareOver(other, *this);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double FloatMemoryState::read(const std::string &array,
                              const std::vector<int64_t> &index) const {
  auto arrIt = values_.find(array);
  if (arrIt != values_.end()) {
    auto it = arrIt->second.find(index);
    if (it != arrIt->second.end())
      return it->second;
  }
  return static_cast<double>(MemoryState::inputValue(seed_, array, index));
}

void FloatMemoryState::write(const std::string &array,
                             const std::vector<int64_t> &index, double value) {
  values_[array][index] = value;
}

bool FloatMemoryState::closeTo(const FloatMemoryState &other,
                               double relTol) const {
  assert(seed_ == other.seed_);
  auto close = [&](double a, double b) {
    double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
    return std::fabs(a - b) <= relTol * scale;
  };
  auto compareOver = [&](const FloatMemoryState &a, const FloatMemoryState &b) {
    for (const auto &[array, cells] : a.values_)
      for (const auto &[index, value] : cells) {
        (void)value;
        if (!close(a.read(array, index), b.read(array, index)))
          return false;
      }
    return true;
  };
  return compareOver(*this, other) && compareOver(other, *this);
}

//===----------------------------------------------------------------------===//
// Value domains
//===----------------------------------------------------------------------===//

namespace {

int64_t applyOpInt(OpKind op, int64_t x, int64_t y) {
  switch (op) {
  case OpKind::Add: return checkedAdd(x, y);
  case OpKind::Mul: return checkedMul(x, y);
  case OpKind::Sub: return checkedAdd(x, -y);
  case OpKind::Div:
    if (y == 0)
      throw ExecutionError("division by zero");
    return x / y;
  case OpKind::Min: return std::min(x, y);
  case OpKind::Max: return std::max(x, y);
  case OpKind::And: return x & y;
  case OpKind::Or: return x | y;
  case OpKind::Xor: return x ^ y;
  }
  throw ExecutionError("unknown operator");
}

double applyOpFloat(OpKind op, double x, double y) {
  switch (op) {
  case OpKind::Add: return x + y;
  case OpKind::Mul: return x * y;
  case OpKind::Sub: return x - y;
  case OpKind::Div: return x / y;
  case OpKind::Min: return std::min(x, y);
  case OpKind::Max: return std::max(x, y);
  default:
    throw ExecutionError("bitwise operator in floating-point mode");
  }
}

struct IntDomain {
  using Value = int64_t;
  using Memory = MemoryState;
  static Value apply(OpKind op, Value x, Value y) { return applyOpInt(op, x, y); }
  static Value identity(OpKind op) { return identityElement(op); }
  static Value fromLiteral(int64_t v) { return v; }
};

struct FloatDomain {
  using Value = double;
  using Memory = FloatMemoryState;
  static Value apply(OpKind op, Value x, Value y) {
    return applyOpFloat(op, x, y);
  }
  static Value identity(OpKind op) {
    if (op == OpKind::Min)
      return std::numeric_limits<double>::infinity();
    if (op == OpKind::Max)
      return -std::numeric_limits<double>::infinity();
    return static_cast<double>(identityElement(op));
  }
  static Value fromLiteral(int64_t v) { return static_cast<double>(v); }
};

//===----------------------------------------------------------------------===//
// Instance collection and step planning
//===----------------------------------------------------------------------===//

int64_t evalAffine(const AffineExpr &e,
                   const std::map<std::string, int64_t> &env) {
  int64_t v = e.constant();
  for (const auto &[name, c] : e.coeffs())
    v = checkedAdd(v, checkedMul(c, env.at(name)));
  return v;
}

struct Instance {
  int stmtIdx;
  std::vector<int64_t> point;
  std::vector<int64_t> stamp;
};

std::vector<Instance> collectInstances(const Scop &scop, const Schedule &sched,
                                       const std::map<std::string, int64_t> &params) {
  size_t dim = sched.paddedDim();
  std::vector<Instance> instances;
  for (size_t si = 0; si < scop.statements.size(); ++si) {
    const Statement &stmt = scop.statements[si];
    std::vector<AffineExpr> ts = sched.timestamp(stmt.name);
    ts.resize(dim, AffineExpr(0));
    for (const auto &pt : stmt.domain.enumerate(params)) {
      std::map<std::string, int64_t> env = params;
      for (size_t k = 0; k < stmt.iterators.size(); ++k)
        env[stmt.iterators[k]] = pt[k];
      Instance inst;
      inst.stmtIdx = static_cast<int>(si);
      inst.point = pt;
      for (const AffineExpr &e : ts)
        inst.stamp.push_back(evalAffine(e, env));
      instances.push_back(std::move(inst));
    }
  }
  std::sort(instances.begin(), instances.end(),
            [](const Instance &a, const Instance &b) {
              if (a.stamp != b.stamp)
                return a.stamp < b.stamp;
              return std::tie(a.stmtIdx, a.point) < std::tie(b.stmtIdx, b.point);
            });
  return instances;
}

struct ExecStep {
  enum class Kind { RegionStart, Exec, RegionEnd } kind;
  size_t instance = 0; // Exec
  int context = 0;     // Exec
};

/// Execution order and context assignment, independent of the value domain:
/// instances sorted by timestamp; tied groups shuffled; with a plan, regions
/// delimited by the init/aggregate boundary and the parallel dimension's
/// values partitioned blockwise into contexts that interleave randomly.
std::vector<ExecStep> planSteps(const std::vector<Instance> &instances,
                                const ExecutionConfig &config) {
  std::mt19937_64 rng(config.interleaveSeed);
  std::vector<ExecStep> steps;

  if (!config.plan || config.plan->entries.empty()) {
    std::vector<size_t> order(instances.size());
    for (size_t i = 0; i < order.size(); ++i)
      order[i] = i;
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      while (j < order.size() &&
             instances[order[j]].stamp == instances[order[i]].stamp)
        ++j;
      std::shuffle(order.begin() + i, order.begin() + j, rng);
      i = j;
    }
    for (size_t idx : order)
      steps.push_back({ExecStep::Kind::Exec, idx, 0});
    return steps;
  }

  const PrivatizationPlan &plan = *config.plan;
  const size_t boundary = plan.boundaryPrefixLen;
  const size_t parallelDim = plan.targetDim;
  const int p = config.contexts;

  auto prefixOf = [](const Instance &inst, size_t len) {
    return std::vector<int64_t>(
        inst.stamp.begin(),
        inst.stamp.begin() + std::min(len, inst.stamp.size()));
  };

  size_t i = 0;
  while (i < instances.size()) {
    size_t regionEnd = i;
    std::vector<int64_t> regionKey = prefixOf(instances[i], boundary);
    while (regionEnd < instances.size() &&
           prefixOf(instances[regionEnd], boundary) == regionKey)
      ++regionEnd;
    steps.push_back({ExecStep::Kind::RegionStart, 0, 0});

    size_t g = i;
    while (g < regionEnd) {
      size_t groupEnd = g;
      std::vector<int64_t> groupKey = prefixOf(instances[g], parallelDim);
      while (groupEnd < regionEnd &&
             prefixOf(instances[groupEnd], parallelDim) == groupKey)
        ++groupEnd;

      std::vector<int64_t> distinct;
      for (size_t k = g; k < groupEnd; ++k) {
        int64_t v = instances[k].stamp[parallelDim];
        if (distinct.empty() || distinct.back() != v)
          distinct.push_back(v);
      }
      auto contextOf = [&](int64_t v) {
        size_t pos = std::lower_bound(distinct.begin(), distinct.end(), v) -
                     distinct.begin();
        return static_cast<int>(pos * static_cast<size_t>(p) / distinct.size());
      };
      std::vector<std::vector<size_t>> queues(p);
      for (size_t k = g; k < groupEnd; ++k)
        queues[contextOf(instances[k].stamp[parallelDim])].push_back(k);
      for (auto &q : queues) {
        for (size_t a = 0; a < q.size();) {
          size_t b = a;
          while (b < q.size() && instances[q[b]].stamp == instances[q[a]].stamp)
            ++b;
          std::shuffle(q.begin() + a, q.begin() + b, rng);
          a = b;
        }
      }
      std::vector<size_t> heads(p, 0);
      size_t remaining = groupEnd - g;
      while (remaining > 0) {
        std::vector<int> nonEmpty;
        for (int c = 0; c < p; ++c)
          if (heads[c] < queues[c].size())
            nonEmpty.push_back(c);
        int pick = nonEmpty[std::uniform_int_distribution<size_t>(
            0, nonEmpty.size() - 1)(rng)];
        steps.push_back({ExecStep::Kind::Exec, queues[pick][heads[pick]++], pick});
        --remaining;
      }
      g = groupEnd;
    }
    steps.push_back({ExecStep::Kind::RegionEnd, 0, 0});
    i = regionEnd;
  }
  return steps;
}

//===----------------------------------------------------------------------===//
// Replay over a value domain
//===----------------------------------------------------------------------===//

template <typename Domain>
class Machine {
  using Value = typename Domain::Value;
  using Memory = typename Domain::Memory;

public:
  Machine(const Scop &scop, const ExecutionConfig &config, Memory &mem)
      : scop_(scop), config_(config), mem_(mem) {
    if (config.plan)
      for (size_t e = 0; e < config.plan->entries.size(); ++e) {
        const auto &entry = config.plan->entries[e];
        int si = scop.stmtIndex(entry.rc.stmt);
        redirected_[{si, entry.rc.loadId}] = e;
        redirected_[{si, entry.rc.storeId}] = e;
      }
  }

  void run(const std::vector<Instance> &instances,
           const std::vector<ExecStep> &steps) {
    for (const ExecStep &step : steps) {
      switch (step.kind) {
      case ExecStep::Kind::RegionStart:
        buffers_.clear(); // every private copy back at the identity
        break;
      case ExecStep::Kind::Exec:
        exec(instances[step.instance], step.context);
        break;
      case ExecStep::Kind::RegionEnd:
        aggregate();
        break;
      }
    }
  }

private:
  Value bufferRead(size_t entryIdx, int context,
                   const std::vector<int64_t> &idx) const {
    auto it = buffers_.find(std::make_tuple(entryIdx, context, idx));
    if (it != buffers_.end())
      return it->second;
    return Domain::identity(config_.plan->entries[entryIdx].rc.op);
  }

  void aggregate() {
    if (!config_.plan)
      return;
    std::set<std::pair<size_t, std::vector<int64_t>>> touched;
    for (const auto &[key, value] : buffers_) {
      (void)value;
      touched.insert({std::get<0>(key), std::get<2>(key)});
    }
    for (const auto &[entryIdx, idx] : touched) {
      const auto &entry = config_.plan->entries[entryIdx];
      const Statement &stmt = scop_.stmt(entry.rc.stmt);
      const std::string &array =
          std::get<StoreInst>(stmt.byId(entry.rc.storeId)).array;
      Value acc = mem_.read(array, idx);
      for (int c = 0; c < config_.contexts; ++c)
        acc = Domain::apply(entry.rc.op, acc, bufferRead(entryIdx, c, idx));
      mem_.write(array, idx, acc);
    }
    buffers_.clear();
  }

  void exec(const Instance &inst, int context) {
    const Statement &stmt = scop_.statements[inst.stmtIdx];
    std::map<std::string, int64_t> env = config_.params;
    for (size_t k = 0; k < stmt.iterators.size(); ++k)
      env[stmt.iterators[k]] = inst.point[k];

    std::vector<Value> values(stmt.instructions.size(), Value{});
    auto valueOf = [&](const ValueRef &v) -> Value {
      if (const auto *lit = std::get_if<int64_t>(&v))
        return Domain::fromLiteral(*lit);
      if (const auto *p = std::get_if<ParamRef>(&v))
        return Domain::fromLiteral(env.at(p->name));
      return values[std::get<InstRef>(v).id];
    };
    auto redirect = [&](int instId) -> std::optional<size_t> {
      auto it = redirected_.find({inst.stmtIdx, instId});
      if (it == redirected_.end())
        return std::nullopt;
      return it->second;
    };

    for (const Instruction &instr : stmt.instructions) {
      if (const auto *l = std::get_if<LoadInst>(&instr)) {
        std::vector<int64_t> idx;
        for (const AffineExpr &e : l->subscripts)
          idx.push_back(evalAffine(e, env));
        if (auto r = redirect(l->id))
          values[l->id] = bufferRead(*r, context, idx);
        else
          values[l->id] = mem_.read(l->array, idx);
      } else if (const auto *b = std::get_if<BinOpInst>(&instr)) {
        values[b->id] = Domain::apply(b->op, valueOf(b->lhs), valueOf(b->rhs));
      } else {
        const auto &s = std::get<StoreInst>(instr);
        std::vector<int64_t> idx;
        for (const AffineExpr &e : s.subscripts)
          idx.push_back(evalAffine(e, env));
        if (auto r = redirect(s.id))
          buffers_[std::make_tuple(*r, context, idx)] = valueOf(s.value);
        else
          mem_.write(s.array, idx, valueOf(s.value));
      }
    }
  }

  const Scop &scop_;
  const ExecutionConfig &config_;
  Memory &mem_;
  std::map<std::pair<int, int>, size_t> redirected_;
  std::map<std::tuple<size_t, int, std::vector<int64_t>>, Value> buffers_;
};

template <typename Domain>
typename Domain::Memory runSequentialT(const Scop &scop,
                                       const std::map<std::string, int64_t> &params,
                                       typename Domain::Memory input) {
  ExecutionConfig config;
  config.params = params;
  config.schedule = originalSchedule(scop);
  std::vector<Instance> instances =
      collectInstances(scop, config.schedule, params);
  std::vector<ExecStep> steps;
  for (size_t i = 0; i < instances.size(); ++i)
    steps.push_back({ExecStep::Kind::Exec, i, 0});
  Machine<Domain> machine(scop, config, input);
  machine.run(instances, steps);
  return input;
}

template <typename Domain>
typename Domain::Memory runScheduledT(const Scop &scop,
                                      const ExecutionConfig &config,
                                      typename Domain::Memory input) {
  if (config.contexts < 1)
    throw ExecutionError("context count must be at least 1");
  std::vector<Instance> instances =
      collectInstances(scop, config.schedule, config.params);
  std::vector<ExecStep> steps = planSteps(instances, config);
  Machine<Domain> machine(scop, config, input);
  machine.run(instances, steps);
  return input;
}

} // namespace

MemoryState runSequential(const Scop &scop,
                          const std::map<std::string, int64_t> &params,
                          MemoryState input) {
  return runSequentialT<IntDomain>(scop, params, std::move(input));
}

MemoryState runScheduled(const Scop &scop, const ExecutionConfig &config,
                         MemoryState input) {
  return runScheduledT<IntDomain>(scop, config, std::move(input));
}

FloatMemoryState runSequentialFloat(const Scop &scop,
                                    const std::map<std::string, int64_t> &params,
                                    FloatMemoryState input) {
  return runSequentialT<FloatDomain>(scop, params, std::move(input));
}

FloatMemoryState runScheduledFloat(const Scop &scop,
                                   const ExecutionConfig &config,
                                   FloatMemoryState input) {
  return runScheduledT<FloatDomain>(scop, config, std::move(input));
}

DifferentialReport
differentialCheck(const Scop &scop, const std::map<std::string, int64_t> &params,
                  const Schedule &schedule,
                  const std::optional<PrivatizationPlan> &plan,
                  const std::vector<int> &contexts,
                  const std::vector<uint64_t> &seeds, uint64_t inputSeed) {
  DifferentialReport report;
  MemoryState reference = runSequential(scop, params, MemoryState(inputSeed));
  for (int p : contexts) {
    for (uint64_t seed : seeds) {
      ExecutionConfig config;
      config.params = params;
      config.contexts = p;
      config.interleaveSeed = seed;
      config.schedule = schedule;
      config.plan = plan;
      MemoryState got = runScheduled(scop, config, MemoryState(inputSeed));
      bool equal = got.equals(reference);
      report.rows.push_back({p, seed, equal});
      report.allEqual &= equal;
    }
  }
  return report;
}

DifferentialReport differentialCheckFloat(
    const Scop &scop, const std::map<std::string, int64_t> &params,
    const Schedule &schedule, const std::optional<PrivatizationPlan> &plan,
    const std::vector<int> &contexts, const std::vector<uint64_t> &seeds,
    uint64_t inputSeed, double relTol) {
  DifferentialReport report;
  FloatMemoryState reference =
      runSequentialFloat(scop, params, FloatMemoryState(inputSeed));
  for (int p : contexts) {
    for (uint64_t seed : seeds) {
      ExecutionConfig config;
      config.params = params;
      config.contexts = p;
      config.interleaveSeed = seed;
      config.schedule = schedule;
      config.plan = plan;
      FloatMemoryState got =
          runScheduledFloat(scop, config, FloatMemoryState(inputSeed));
      bool equal = got.closeTo(reference, relTol);
      report.rows.push_back({p, seed, equal});
      report.allEqual &= equal;
    }
  }
  return report;
}

} // namespace polyred
