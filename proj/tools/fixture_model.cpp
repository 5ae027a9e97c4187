// Line-protocol model stub for exercising the probe client. Reads one JSON
// request per line ({"id":N,"rows":[...]}), answers {"id":N,"outcomes":[...]}.
// Behavior is selected by argv so tests can script well-behaved and broken
// models alike.
//
//   echo <col>            outcome = numeric value of <col>
//   biased <col> <value>  outcome = 1 when <col> equals <value>, else 0
//   constant <v>          outcome = v for every row
//   threshold <col> <cut> outcome = 1 when numeric <col> >= cut
//   scale <col> <div>     outcome = numeric <col> / div (score output)
//   crash                 exit immediately without answering
//   hang                  read requests but never answer
//   short                 answer with one outcome missing
//   badid                 answer with a wrong request id

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

using nlohmann::json;

namespace {

double numeric(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
  if (v.is_string()) {
    try {
      return std::stod(v.get<std::string>());
    } catch (...) {
      return 0.0;
    }
  }
  return 0.0;
}

std::string stringy(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    std::cerr << "usage: fixture_model <mode> [args...]\n";
    return 64;
  }
  const std::string mode = args[0];
  if (mode == "crash") return 3;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
      continue;
    }
    json request = json::parse(line, nullptr, false);
    if (request.is_discarded()) return 65;
    json outcomes = json::array();
    for (const auto& row : request["rows"]) {
      if (mode == "echo") {
        outcomes.push_back(numeric(row.at(args.at(1))));
      } else if (mode == "biased") {
        outcomes.push_back(stringy(row.at(args.at(1))) == args.at(2) ? 1.0 : 0.0);
      } else if (mode == "constant") {
        outcomes.push_back(std::stod(args.at(1)));
      } else if (mode == "threshold") {
        outcomes.push_back(numeric(row.at(args.at(1))) >= std::stod(args.at(2))
                               ? 1.0
                               : 0.0);
      } else if (mode == "scale") {
        outcomes.push_back(numeric(row.at(args.at(1))) / std::stod(args.at(2)));
      } else {
        outcomes.push_back(0.0);
      }
    }
    if (mode == "short" && !outcomes.empty()) outcomes.erase(outcomes.size() - 1);
    json response{{"id", request["id"]}, {"outcomes", outcomes}};
    if (mode == "badid") response["id"] = request["id"].get<long long>() + 1;
    std::cout << response.dump() << "\n" << std::flush;
  }
  return 0;
}
