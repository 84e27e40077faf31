#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "appagent/appdriver/port.hpp"
#include "appagent/core/types.hpp"
#include "appagent/reasoning/port.hpp"

namespace appagent {

inline constexpr std::string_view kSignatureSeparator = "∥";  // ∥

/// normalize_query(query) ∥ app_id
std::string make_signature(std::string_view query, std::string_view app_id);

/// Personalization store of OperationDocuments.
///
/// Persisted as one canonical document per line in an append-only log; the
/// in-memory index is rebuilt by a full scan on open. Updates (including the
/// use_count bump of a lookup hit) append a superseding line. Without a path
/// the store lives in memory only.
class HistoryStore {
 public:
  HistoryStore() = default;
  explicit HistoryStore(std::filesystem::path log_path);

  /// Writes one document per app that has steps in `trace`, each with that
  /// app's action subsequence. The note comes from reasoning.summarize_task
  /// unless `reuse_note` is given. Throws StorageFailure when the log cannot
  /// be written; nothing is added in that case.
  std::vector<OperationDocument> record(std::string_view query, const ExecutionTrace& trace,
                                        const IntegratedResponse& response, ReasoningPort& reasoning,
                                        const std::optional<std::string>& reuse_note = std::nullopt);

  /// Most recent successful document for the exact signature. A hit bumps
  /// use_count and last_used_at.
  std::optional<OperationDocument> lookup(std::string_view query, std::string_view app_id);

  /// Up to `limit` successful documents: exact-signature matches for `app_ids`
  /// first, then the most recent others. Does not count as a use.
  std::vector<OperationDocument> hints(std::string_view query, const std::vector<std::string>& app_ids,
                                       size_t limit) const;

  std::optional<OperationDocument> latest(std::string_view signature) const;

  /// Latest document of every signature, in order of first appearance.
  std::vector<OperationDocument> list() const;

  /// Every line of the log, oldest first.
  std::vector<OperationDocument> documents() const;

  /// Lines that could not be parsed during the startup scan.
  size_t skipped_lines() const { return skipped_lines_; }

  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  void append_locked(const OperationDocument& doc);
  void index_locked(const OperationDocument& doc);

  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::vector<OperationDocument> documents_;
  std::map<std::string, size_t> latest_;             // signature -> documents_ index
  std::map<std::string, size_t> latest_success_;     // signature -> documents_ index
  std::vector<std::string> signature_order_;
  size_t skipped_lines_ = 0;
};

struct ReplayResult {
  bool diverged = false;
  int divergence_step = -1;  // index into action_summary
  std::string reason;
  /// Replayed steps; step_index counts from 0 within the fragment.
  std::vector<TraceStep> steps;
  /// Evidence harvested from the fragment (no ids assigned).
  std::vector<EvidenceItem> evidence;
  std::map<std::string, Attachment> attachments;
};

/// Re-issues a document's action_summary verbatim, comparing each observed
/// page kind with the recorded one. The first mismatch (or driver error)
/// abandons the replay with diverged = true. Requires document.success.
ReplayResult replay(const OperationDocument& document, AppDriver& driver, int priority = 0,
                    std::chrono::milliseconds slot_wait = std::chrono::milliseconds{0});

}  // namespace appagent
