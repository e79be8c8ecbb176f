#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dfpsim/types.hpp"

namespace dfp {

struct LatencyRecord {
  JobId job_id;
  std::int64_t message_id;
  TerminalId src_terminal;
  TerminalId dst_terminal;
  std::int64_t size_bytes;
  Ns issue_ns;
  Ns delivery_ns;
  int hops;  // routers visited
  PathClass path_class;
  Vl vl;

  Ns latency() const { return delivery_ns - issue_ns; }
};

struct SummaryStats {
  Ns min = 0, p25 = 0, median = 0, p75 = 0, max = 0;
  double mean = 0.0;
};

// Nearest-rank percentiles plus the arithmetic mean.
SummaryStats summarize(std::span<const Ns> latencies);

struct ArrivalRateSample {
  JobId job_id;
  GroupId group;
  Ns window_start;
  Ns window_len;
  std::int64_t bytes;
  double rate() const { return double(bytes) * 1e9 / double(window_len); }
};

// Owned by the sequential event loop during a run; read-only afterwards.
class MetricsCollector {
 public:
  explicit MetricsCollector(Ns sample_interval_ns, int num_groups = 0)
      : window_(sample_interval_ns), num_groups_(num_groups) {}

  void record_delivery(const LatencyRecord& rec);
  // Bytes of an inter-group message received by a spine router of `group`.
  void spine_arrival(JobId job, GroupId group, Ns time, std::int64_t bytes);
  // Extends arrival series up to (at least) `end`.
  void close_run(Ns end_time);

  const std::vector<LatencyRecord>& records() const { return records_; }
  std::vector<JobId> jobs_seen() const;
  SummaryStats summarize_job(JobId job) const;  // QueryError when empty
  std::vector<ArrivalRateSample> arrival_rate_series(JobId job,
                                                     GroupId group) const;

  void write_records_csv(const std::string& path) const;
  void write_summary_csv(const std::string& path) const;
  void write_arrival_csv(const std::string& path) const;

  static std::string summary_row(JobId job, const SummaryStats& s,
                                 std::size_t count);
  static const char* records_header();
  static const char* summary_header();
  static const char* arrival_header();

 private:
  Ns window_;
  int num_groups_;  // 0 when unknown; positive enables group validation
  Ns end_time_ = 0;
  std::vector<LatencyRecord> records_;
  std::set<std::pair<JobId, std::int64_t>> seen_ids_;
  std::map<std::pair<JobId, GroupId>, std::vector<std::int64_t>> arrivals_;
};

}  // namespace dfp
