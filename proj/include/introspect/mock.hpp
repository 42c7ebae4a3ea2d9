#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "introspect/gateway.hpp"

namespace introspect::mock {

/// A deterministic policy for a scripted model. Two models with the same key
/// share the exact same policy, which makes a same-key observer a perfect
/// self-oracle on every task protocol.
struct PersonaConfig {
  std::string key;                 // seeds the whole policy
  double condition_jitter = 0.0;   // per-sample wobble on dilemma probabilities
  bool introspective = true;       // introspection condition tracks the CoT condition exactly
  bool sabotage_predictions = false;  // anti-oracle: deliberately wrong k-th word predictions
};

/// Scripted model handling every protocol prompt this engine emits: k-th word
/// prediction, the three dilemma conditions, dilemma/paraphrase generation,
/// paraphrase choice, heads-up clues and guesses, prompt reconstruction, and
/// plain question answering as the fallback.
gateway::ScriptedModel make_persona_model(const PersonaConfig& persona);

/// Scripted model answering the three dilemma conditions with fixed
/// probabilities; used to pin exact KL values in tests.
gateway::ScriptedModel make_fixed_dilemma_model(double pa_cot, double pa_intro, double pa_gut);

/// The deterministic answer a persona gives to a plain question. Exposed so
/// tests can predict scripted behavior independently.
std::string persona_answer(const std::string& key, const std::string& question,
                           std::uint64_t seed);

/// Registers persona models plus the hashing embedder; returns the roster.
std::vector<gateway::ModelSpec> install_mock_roster(gateway::ModelGateway& gw,
                                                    const std::vector<std::string>& names,
                                                    double condition_jitter = 0.02);

/// Built-in corpora for --mock runs and desk-scale tests.
std::vector<std::string> mock_questions(int n);
std::vector<std::string> mock_secrets(int n);

}  // namespace introspect::mock
