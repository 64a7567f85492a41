#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pop {

enum class errc {
    signer_not_in_ring,
    ring_invalid,
    config_invalid,
    entry_after_seal,
    duplicate_entry,
    seal_too_early,
    not_present,
    already_scanned,
    token_reused,
    nothing_scanned,
    wrong_phase,
    bad_cosignature,
    duplicate_witness,
    insufficient_volunteers,
    bad_reveal,
    too_early,
    deadline_mismatch,
    body_duplication,
    ticket_reused,
    token_not_in_roll,
    k_too_large,
    invalid_scenario,
    malformed_input,
};

std::string_view to_string(errc code) noexcept;

// Every precondition failure in the toolkit surfaces as this exception; the
// code names the failure kind so callers can branch without string matching.
class pop_error : public std::runtime_error {
public:
    pop_error(errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

}  // namespace pop
