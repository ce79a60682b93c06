#pragma once

// RAII owners for the C API handles and a status check that turns failures
// into exceptions carrying the status code.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "batchq/batchq.h"

namespace cli {

class ApiError : public std::runtime_error {
 public:
  ApiError(bq_status status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  bq_status status() const { return status_; }

 private:
  bq_status status_;
};

inline void check(bq_status status) {
  if (status != BQ_OK)
    throw ApiError(status, std::string(bq_status_name(status)) + " error: " + bq_last_error());
}

struct ProfileFree {
  void operator()(bq_profile* p) const { bq_profile_free(p); }
};
struct ModelFree {
  void operator()(bq_model* p) const { bq_model_free(p); }
};
struct PolicyFree {
  void operator()(bq_policy* p) const { bq_policy_free(p); }
};

using Profile = std::unique_ptr<bq_profile, ProfileFree>;
using Model = std::unique_ptr<bq_model, ModelFree>;
using Policy = std::unique_ptr<bq_policy, PolicyFree>;

template <class Handle, class Fn>
Handle make(Fn&& fn) {
  typename Handle::pointer raw = nullptr;
  check(fn(&raw));
  return Handle(raw);
}

inline std::vector<int> actions_of(const bq_policy* policy) {
  std::vector<int> a(bq_policy_size(policy));
  check(bq_policy_get_actions(policy, a.data(), a.size()));
  return a;
}

}  // namespace cli
