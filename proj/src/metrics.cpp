#include "dfpsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dfp {

SummaryStats summarize(std::span<const Ns> latencies) {
  if (latencies.empty()) {
    throw QueryError("summarize: no latency records");
  }
  std::vector<Ns> sorted(latencies.begin(), latencies.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // Nearest-rank: smallest value with at least p percent of samples at or
  // below it.
  const auto rank = [n](double p) {
    const std::size_t r = std::size_t(std::ceil(p * double(n)));
    return std::max<std::size_t>(r, 1) - 1;
  };
  SummaryStats s;
  s.min = sorted.front();
  s.p25 = sorted[rank(0.25)];
  s.median = sorted[rank(0.50)];
  s.p75 = sorted[rank(0.75)];
  s.max = sorted.back();
  long double sum = 0;
  for (Ns v : sorted) sum += v;
  s.mean = double(sum / n);
  return s;
}

void MetricsCollector::record_delivery(const LatencyRecord& rec) {
  if (rec.delivery_ns < rec.issue_ns) {
    throw SimulationError("delivery before issue for message " +
                          std::to_string(rec.message_id));
  }
  if (!seen_ids_.insert({rec.job_id, rec.message_id}).second) {
    throw SimulationError("duplicate delivery record for job " +
                          std::to_string(rec.job_id) + " message " +
                          std::to_string(rec.message_id));
  }
  records_.push_back(rec);
  end_time_ = std::max(end_time_, rec.delivery_ns);
}

void MetricsCollector::spine_arrival(JobId job, GroupId group, Ns time,
                                     std::int64_t bytes) {
  auto& series = arrivals_[{job, group}];
  const std::size_t w = std::size_t(time / window_);
  if (series.size() <= w) series.resize(w + 1, 0);
  series[w] += bytes;
  end_time_ = std::max(end_time_, time);
}

void MetricsCollector::close_run(Ns end_time) {
  end_time_ = std::max(end_time_, end_time);
  const std::size_t windows = std::size_t(end_time_ / window_) + 1;
  for (auto& [key, series] : arrivals_) {
    if (series.size() < windows) series.resize(windows, 0);
  }
}

std::vector<JobId> MetricsCollector::jobs_seen() const {
  std::set<JobId> jobs;
  for (const auto& r : records_) jobs.insert(r.job_id);
  for (const auto& [key, series] : arrivals_) jobs.insert(key.first);
  return {jobs.begin(), jobs.end()};
}

SummaryStats MetricsCollector::summarize_job(JobId job) const {
  std::vector<Ns> lat;
  for (const auto& r : records_) {
    if (r.job_id == job) lat.push_back(r.latency());
  }
  return summarize(lat);
}

std::vector<ArrivalRateSample> MetricsCollector::arrival_rate_series(
    JobId job, GroupId group) const {
  if (group < 0 || (num_groups_ > 0 && group >= num_groups_)) {
    throw QueryError("arrival_rate_series: unknown group " +
                     std::to_string(group));
  }
  const auto it = arrivals_.find({job, group});
  std::vector<ArrivalRateSample> out;
  const std::size_t windows = std::size_t(end_time_ / window_) + 1;
  const std::vector<std::int64_t>* series =
      it == arrivals_.end() ? nullptr : &it->second;
  for (std::size_t w = 0; w < windows; ++w) {
    const std::int64_t bytes =
        series != nullptr && w < series->size() ? (*series)[w] : 0;
    out.push_back({job, group, Ns(w) * window_, window_, bytes});
  }
  return out;
}

const char* MetricsCollector::records_header() {
  return "job_id,message_id,src_terminal,dst_terminal,size_bytes,issue_ns,"
         "delivery_ns,latency_ns,hops,path_class,vl";
}

const char* MetricsCollector::summary_header() {
  return "job_id,count,min_ns,p25_ns,median_ns,p75_ns,max_ns,mean_ns";
}

const char* MetricsCollector::arrival_header() {
  return "job_id,group,window_start_ns,window_len_ns,bytes,rate_bytes_per_s";
}

void MetricsCollector::write_records_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot write");
  out << records_header() << "\n";
  for (const auto& r : records_) {
    out << r.job_id << ',' << r.message_id << ',' << r.src_terminal << ','
        << r.dst_terminal << ',' << r.size_bytes << ',' << r.issue_ns << ','
        << r.delivery_ns << ',' << r.latency() << ',' << r.hops << ','
        << to_string(r.path_class) << ',' << to_string(r.vl) << "\n";
  }
}

std::string MetricsCollector::summary_row(JobId job, const SummaryStats& s,
                                          std::size_t count) {
  std::ostringstream out;
  out.precision(17);
  out << job << ',' << count << ',' << s.min << ',' << s.p25 << ','
      << s.median << ',' << s.p75 << ',' << s.max << ',' << s.mean;
  return out.str();
}

void MetricsCollector::write_summary_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot write");
  out << summary_header() << "\n";
  std::map<JobId, std::vector<Ns>> by_job;
  for (const auto& r : records_) by_job[r.job_id].push_back(r.latency());
  for (const auto& [job, lat] : by_job) {
    out << summary_row(job, summarize(lat), lat.size()) << "\n";
  }
}

void MetricsCollector::write_arrival_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot write");
  out << arrival_header() << "\n";
  out.precision(17);
  for (const auto& [key, series] : arrivals_) {
    for (const auto& s : arrival_rate_series(key.first, key.second)) {
      out << s.job_id << ',' << s.group << ',' << s.window_start << ','
          << s.window_len << ',' << s.bytes << ',' << s.rate() << "\n";
    }
  }
}

}  // namespace dfp
