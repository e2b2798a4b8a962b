#include <omp.h>

#include <exception>

#include "imdp/experiments.hpp"

namespace imdp::exp {

namespace {

EpisodeSummary run_one(const Condition& cond, const manager::ManagerPolicy& policy, std::uint64_t master,
                       const std::string& task, const std::string& team_name, int k) {
  const std::uint64_t seed = eval_episode_seed(master, task, team_name, k);
  const sim::WorldState world = cond.scenario->spawn(seed);
  manager::EpisodeStreams streams(seed, cond.team.size());
  return summarize(manager::run_episode(world, cond.spec, policy, cond.team, cond.traffic, streams));
}

}  // namespace

std::vector<EpisodeSummary> evaluate_serial(const Condition& cond, const manager::ManagerPolicy& policy,
                                            std::uint64_t master, const std::string& team_name, int episodes) {
  const std::string task = to_string(cond.scenario->task());
  std::vector<EpisodeSummary> out;
  out.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  for (int k = 0; k < episodes; ++k) out.push_back(run_one(cond, policy, master, task, team_name, k));
  return out;
}

std::vector<EpisodeSummary> evaluate_parallel(const Condition& cond, const manager::ManagerPolicy& policy,
                                              std::uint64_t master, const std::string& team_name, int episodes,
                                              int jobs) {
  if (jobs <= 1) return evaluate_serial(cond, policy, master, team_name, episodes);
  const std::string task = to_string(cond.scenario->task());
  std::vector<EpisodeSummary> out(static_cast<std::size_t>(std::max(episodes, 0)));
  std::exception_ptr error;
#pragma omp parallel for num_threads(jobs) schedule(dynamic)
  for (int k = 0; k < episodes; ++k) {
    try {
      out[static_cast<std::size_t>(k)] = run_one(cond, policy, master, task, team_name, k);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace imdp::exp
