#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgfdc/checkpoint.hpp"

namespace pgfdc {

enum class SnapshotKind { discriminator, curiosity };

inline const char* to_string(SnapshotKind k) {
  return k == SnapshotKind::discriminator ? "discriminator" : "curiosity";
}

// Versioned, immutable copy of one learner's parameters. `params` must be
// deep copies (use named_clone), never live views, so a snapshot can cross
// threads without ever observing the publisher's next training step. `stats`
// carries the diagnostics recorded by the publishing phase (empty at version
// 0, which represents the freshly initialized parameters).
struct ParamSnapshot {
  std::uint64_t version = 0;
  ParamMap params;
  std::vector<double> stats;
};

// Mailbox for the latest snapshot of each parameter kind. Publishing swaps a
// shared pointer under a brief lock, so readers never wait for a training
// step and always see either the old snapshot or the new one, never a
// mixture. Versions increase by exactly one per publish.
class SnapshotHub {
 public:
  // Installs the version-0 snapshot (initialization parameters). Must be
  // called once per kind before any publish or fetch of that kind.
  void init(SnapshotKind kind, ParamMap initial_params) {
    auto snap = std::make_shared<ParamSnapshot>();
    snap->version = 0;
    snap->params = std::move(initial_params);
    std::lock_guard<std::mutex> lock(mu_);
    auto& cell = slot(kind);
    if (cell)
      throw std::logic_error(std::string("snapshot hub already initialized for ") +
                             to_string(kind));
    cell = std::move(snap);
  }

  bool has(SnapshotKind kind) const {
    std::lock_guard<std::mutex> lock(mu_);
    return static_cast<bool>(kind == SnapshotKind::discriminator ? disc_ : cur_);
  }

  std::uint64_t publish(SnapshotKind kind, ParamMap params, std::vector<double> stats = {}) {
    auto snap = std::make_shared<ParamSnapshot>();
    snap->params = std::move(params);  // assembled outside the lock
    snap->stats = std::move(stats);
    std::lock_guard<std::mutex> lock(mu_);
    auto& cell = slot(kind);
    if (!cell)
      throw std::logic_error(std::string("publish of ") + to_string(kind) +
                             " before the hub was initialized for it");
    snap->version = cell->version + 1;
    cell = std::move(snap);
    return cell->version;
  }

  // Always returns the highest published version (version 0 before the first
  // publish). The returned snapshot is immutable and safe to read without
  // further locking.
  std::shared_ptr<const ParamSnapshot> fetch(SnapshotKind kind) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto& cell = kind == SnapshotKind::discriminator ? disc_ : cur_;
    if (!cell)
      throw std::logic_error(std::string("fetch of ") + to_string(kind) +
                             " before the hub was initialized for it");
    return cell;
  }

 private:
  std::shared_ptr<const ParamSnapshot>& slot(SnapshotKind kind) {
    return kind == SnapshotKind::discriminator ? disc_ : cur_;
  }

  mutable std::mutex mu_;
  std::shared_ptr<const ParamSnapshot> disc_;
  std::shared_ptr<const ParamSnapshot> cur_;
};

}  // namespace pgfdc
