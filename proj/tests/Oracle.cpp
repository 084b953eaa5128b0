#include "Oracle.h"

#include <cassert>
#include <functional>
#include <stdexcept>

namespace polyred::test {

int64_t oracleInput(uint64_t seed, const std::string &array,
                    const std::vector<int64_t> &index) {
  uint64_t h = seed * 0x9e3779b97f4a7c15ull;
  for (char c : array)
    h = (h ^ static_cast<uint64_t>(c)) * 0x100000001b3ull;
  for (int64_t v : index)
    h = (h ^ static_cast<uint64_t>(v + 0x7fff)) * 0x100000001b3ull;
  h ^= h >> 33;
  return static_cast<int64_t>(h % 101) - 50; // values in [-50, 50]
}

namespace {

class OracleInterp {
public:
  OracleInterp(const Scop &scop, const std::map<std::string, int64_t> &params,
               uint64_t seed)
      : scop_(scop), env_(params), seed_(seed) {}

  OracleRun take() && { return std::move(run_); }

  void walk(const LoopNode &node) {
    for (const LoopNode::Item &item : node.items) {
      if (item.kind == LoopNode::Item::Kind::Stmt) {
        exec(scop_.statements[item.index]);
        continue;
      }
      const LoopNode &child = node.children[item.index];
      int64_t ub = eval(child.upper);
      for (int64_t v = 0; v < ub; ++v) {
        env_[child.iterator] = v;
        walk(child);
      }
      env_.erase(child.iterator);
    }
  }

private:
  int64_t eval(const AffineExpr &e) const {
    int64_t v = e.constant();
    for (const auto &[name, c] : e.coeffs())
      v += c * env_.at(name);
    return v;
  }

  int64_t read(const std::string &array, const std::vector<int64_t> &idx) {
    auto arrIt = run_.memory.find(array);
    if (arrIt != run_.memory.end()) {
      auto it = arrIt->second.find(idx);
      if (it != arrIt->second.end())
        return it->second;
    }
    return oracleInput(seed_, array, idx);
  }

  void exec(const Statement &stmt) {
    std::vector<int64_t> point;
    for (const std::string &it : stmt.iterators)
      point.push_back(env_.at(it));
    run_.instanceOrder.emplace_back(stmt.name, point);

    std::map<int, int64_t> values;
    auto valueOf = [&](const ValueRef &v) -> int64_t {
      if (const auto *lit = std::get_if<int64_t>(&v))
        return *lit;
      if (const auto *p = std::get_if<ParamRef>(&v))
        return env_.at(p->name);
      return values.at(std::get<InstRef>(v).id);
    };

    for (const Instruction &inst : stmt.instructions) {
      if (const auto *l = std::get_if<LoadInst>(&inst)) {
        std::vector<int64_t> idx;
        for (const AffineExpr &e : l->subscripts)
          idx.push_back(eval(e));
        values[l->id] = read(l->array, idx);
        run_.trace.push_back({stmt.name, point, l->id, false, l->array, idx});
      } else if (const auto *b = std::get_if<BinOpInst>(&inst)) {
        int64_t x = valueOf(b->lhs), y = valueOf(b->rhs);
        int64_t r = 0;
        switch (b->op) {
        case OpKind::Add: r = x + y; break;
        case OpKind::Mul: r = x * y; break;
        case OpKind::Sub: r = x - y; break;
        case OpKind::Div:
          if (y == 0)
            throw std::runtime_error("oracle: division by zero");
          r = x / y;
          break;
        case OpKind::Min: r = std::min(x, y); break;
        case OpKind::Max: r = std::max(x, y); break;
        case OpKind::And: r = x & y; break;
        case OpKind::Or: r = x | y; break;
        case OpKind::Xor: r = x ^ y; break;
        }
        values[b->id] = r;
      } else {
        const auto &s = std::get<StoreInst>(inst);
        std::vector<int64_t> idx;
        for (const AffineExpr &e : s.subscripts)
          idx.push_back(eval(e));
        run_.memory[s.array][idx] = valueOf(s.value);
        run_.trace.push_back({stmt.name, point, s.id, true, s.array, idx});
      }
    }
  }

  const Scop &scop_;
  std::map<std::string, int64_t> env_;
  uint64_t seed_;
  OracleRun run_;
};

bool sameInstance(const OracleEvent &a, const OracleEvent &b) {
  return a.stmt == b.stmt && a.point == b.point;
}

} // namespace

OracleRun runOracle(const Scop &scop,
                    const std::map<std::string, int64_t> &params,
                    uint64_t inputSeed) {
  OracleInterp interp(scop, params, inputSeed);
  interp.walk(scop.root);
  return std::move(interp).take();
}

std::set<InstancePair> oracleMemoryPairs(const OracleRun &run) {
  // Bucket events per location, then emit every ordered pair with a write.
  std::map<std::pair<std::string, std::vector<int64_t>>,
           std::vector<const OracleEvent *>>
      byLocation;
  for (const OracleEvent &e : run.trace)
    byLocation[{e.array, e.index}].push_back(&e);
  std::set<InstancePair> pairs;
  for (const auto &[loc, events] : byLocation) {
    for (size_t i = 0; i < events.size(); ++i) {
      for (size_t j = i + 1; j < events.size(); ++j) {
        const OracleEvent &a = *events[i], &b = *events[j];
        if (!a.isWrite && !b.isWrite)
          continue;
        if (sameInstance(a, b))
          continue; // intra-instance ordering is below instance granularity
        DepKind kind = a.isWrite ? (b.isWrite ? DepKind::WAW : DepKind::RAW)
                                 : DepKind::WAR;
        pairs.insert({a.stmt, a.point, b.stmt, b.point, kind});
      }
    }
  }
  return pairs;
}

std::set<InstancePair> oracleValuePairs(const OracleRun &run) {
  std::map<std::pair<std::string, std::vector<int64_t>>,
           std::vector<const OracleEvent *>>
      byLocation;
  for (const OracleEvent &e : run.trace)
    byLocation[{e.array, e.index}].push_back(&e);
  std::set<InstancePair> pairs;
  for (const auto &[loc, events] : byLocation) {
    const OracleEvent *lastWrite = nullptr;
    std::vector<const OracleEvent *> readsSince;
    for (const OracleEvent *e : events) {
      if (!e->isWrite) {
        if (lastWrite && !sameInstance(*lastWrite, *e))
          pairs.insert(
              {lastWrite->stmt, lastWrite->point, e->stmt, e->point, DepKind::RAW});
        readsSince.push_back(e);
        continue;
      }
      if (lastWrite && !sameInstance(*lastWrite, *e))
        pairs.insert(
            {lastWrite->stmt, lastWrite->point, e->stmt, e->point, DepKind::WAW});
      for (const OracleEvent *r : readsSince)
        if (!sameInstance(*r, *e))
          pairs.insert({r->stmt, r->point, e->stmt, e->point, DepKind::WAR});
      lastWrite = e;
      readsSince.clear();
    }
  }
  return pairs;
}

} // namespace polyred::test
