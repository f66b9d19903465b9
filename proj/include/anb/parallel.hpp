#pragma once

namespace anb {

// Selects between the OpenMP kernel and its serial reference. Both paths
// produce identical results; the serial one is kept for testing and
// benchmarking.
enum class Exec { serial, parallel };

// Number of OpenMP worker threads; 0 leaves the runtime default.
void set_num_threads(int jobs);
int max_threads();

} // namespace anb
