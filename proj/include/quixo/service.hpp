#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "quixo/database.hpp"

namespace quixo {

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

using QueryParams = std::map<std::string, std::string>;

// Stateless HTTP front end over one database per board size.
//   GET /api/v1/eval?state=S[&size=N]
//   GET /api/v1/bestmove?state=S[&size=N][&policy=P][&seed=K]
//   GET /api/v1/meta
// Everything else is served from the static directory, when one is given.
class Service {
 public:
  Service(std::map<int, std::shared_ptr<const Database>> dbs,
          std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse eval(const QueryParams& q) const;
  ApiResponse bestmove(const QueryParams& q) const;
  ApiResponse meta() const;

  // Port 0 picks a free port. Returns the bound port, or -1 on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  bool run();
  void stop();

 private:
  struct Server;
  std::map<int, std::shared_ptr<const Database>> dbs_;
  std::optional<std::filesystem::path> static_dir_;
  std::unique_ptr<Server> server_;
};

// Open each directory and key the databases by board size. A later directory
// for the same size replaces an earlier one.
std::map<int, std::shared_ptr<const Database>> open_databases(
    const std::vector<std::filesystem::path>& dirs);

}  // namespace quixo
