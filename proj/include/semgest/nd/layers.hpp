#pragma once

#include <cstddef>
#include <string>

#include "semgest/nd/params.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::nd {

// Fully connected layer: "<prefix>.w" (in x out) and optional "<prefix>.b" (1 x out),
// initialised uniformly in +-1/sqrt(in).
void init_linear(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                 Rng& rng, bool bias = true);
Var linear(const Bound& p, const std::string& prefix, Var x);

// LSTM cell: "<prefix>.wx" (in x 4H), "<prefix>.wh" (H x 4H), "<prefix>.b" (1 x 4H).
// Gate order is input, forget, candidate, output.
void init_lstm(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
               Rng& rng);

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_zero_state(Tape& tape, std::size_t hidden);
LstmState lstm_step(const Bound& p, const std::string& prefix, Var x, LstmState state,
                    std::size_t hidden);

// Runs "<prefix>.fwd" over the rows of `seq` (n x in) and "<prefix>.bwd" over
// them in reverse; returns the two final hidden states side by side (1 x 2H).
void init_bilstm(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
                 Rng& rng);
Var bilstm_encode(const Bound& p, const std::string& prefix, Var seq, std::size_t hidden);

// Unrolled decoder: the conditioning row (1 x c) is the cell input at every
// step; "<prefix>.out" maps each hidden state to an output row. Returns n x out.
void init_lstm_decoder(ParamSet& params, const std::string& prefix, std::size_t cond,
                       std::size_t hidden, std::size_t out, Rng& rng);
Var lstm_decode(const Bound& p, const std::string& prefix, Var cond, std::size_t steps,
                std::size_t hidden);

}  // namespace semgest::nd
