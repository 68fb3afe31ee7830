#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "oamsim/certify.hpp"
#include "oamsim/experiment.hpp"

namespace oamsim {

// 16-bit binary PGM of the intensity, normalized to the frame maximum.
// The comment line records nx, ny, dx, dy and the wavelength.
void write_pgm16(const ComplexField& f, const std::filesystem::path& file);

// Complex samples as "re,im" pairs, one row per grid line, after a header
// line with the grid parameters.
void write_field_csv(const ComplexField& f, const std::filesystem::path& file);

void write_spectrum_csv(const OamSpectrum& spec, const std::filesystem::path& file);

void write_counts_csv(std::span<const CountRecord> records, std::uint64_t seed,
                      const std::filesystem::path& file);

void write_transfer_json(const TransferMatrix& T, const std::filesystem::path& file);

void write_witness_json(const WitnessOutcome& outcome, std::uint64_t seed,
                        const std::filesystem::path& file);

void write_chsh_json(const ChshSettings& settings, const ChshResult& result,
                     std::uint64_t seed, const std::filesystem::path& file);

// Minimal JSON-schema check: type / properties / required /
// additionalProperties / items / enum. Returns false and fills `error`
// on the first violation.
bool validate_json(const std::string& json_text, const std::string& schema_text,
                   std::string* error = nullptr);
bool validate_json_file(const std::filesystem::path& json_file,
                        const std::filesystem::path& schema_file,
                        std::string* error = nullptr);

// Machine-readable error blob for the CLI.
std::string error_json(const std::string& type, const std::string& message);

}  // namespace oamsim
