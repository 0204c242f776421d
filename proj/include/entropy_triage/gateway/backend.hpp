#pragma once

#include <atomic>
#include <cstddef>
#include <string>

namespace entropy_triage {

enum class Purpose { Generate, Entail };

inline std::string to_string(Purpose p) { return p == Purpose::Generate ? "generate" : "entail"; }

struct ChatRequest {
  Purpose purpose = Purpose::Generate;
  std::string model_id;
  std::string prompt;
  double temperature = 1.0;
  double top_p = 0.9;
  int max_output_tokens = 256;
  std::size_t sample_index = 0;
};

/// A chat-completion service. `complete` returns the raw payload: the
/// record_score argument object (JSON text) for generation requests, the
/// assistant message text for entailment requests. Implementations must be
/// safe to call concurrently and throw TransportError on request failure.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Forwards to another backend and counts requests.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(Backend& inner) : inner_(inner) {}
  std::string complete(const ChatRequest& request) override {
    ++calls_;
    return inner_.complete(request);
  }
  std::string name() const override { return inner_.name(); }
  std::size_t calls() const { return calls_.load(); }

 private:
  Backend& inner_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace entropy_triage
