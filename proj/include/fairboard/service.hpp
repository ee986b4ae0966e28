#pragma once

#include <map>
#include <string>

#include "fairboard/config.hpp"

namespace fairboard {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string manifest_hash;
};

using QueryParams = std::map<std::string, std::string>;

// Read-only JSON API over the artifacts below config.output_path().
//
//   GET  /api/cohort
//   GET  /api/metrics?model=&outcome=
//   GET  /api/league?wp=&we=
//   GET  /api/univariate?factor=&metric=
//   GET  /api/spatial/{compartment}/{metric}?alpha=&axis=&slice=
//   GET  /api/representational?metric=
//   POST /api/recompute        {"alpha": a, "wp": w, "we": 1 - w}
//
// Every body is a JSON object carrying "manifest_hash". Unknown resources give
// 404, invalid parameters 422 and requests touching permutation, REML or
// embedding settings 409.
class Service {
 public:
  explicit Service(AnalysisConfig config);

  HttpResponse handle(const std::string& method, const std::string& path, const QueryParams& params,
                      const std::string& body = {}) const;

  // Blocks until the process is stopped.
  void serve(const std::string& host, int port) const;

  const AnalysisConfig& config() const { return config_; }

 private:
  AnalysisConfig config_;
};

// Keys of POST /api/recompute that require re-running an analysis stage.
bool is_heavy_recompute_key(const std::string& key);

}  // namespace fairboard
