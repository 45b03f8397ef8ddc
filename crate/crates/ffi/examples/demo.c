/* Build: cc examples/demo.c -Iinclude -L../../target/release -lmolrelay_ffi -o demo */
#include <stdio.h>
#include "molrelay.h"

static int check(MrStatus s, const char *what) {
    if (s != MR_STATUS_OK) {
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, mr_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    MrSpec *spec = NULL;
    MrResults *results = NULL;
    int32_t detectors[] = {MR_DETECTOR_DFE_THRESHOLD, MR_DETECTOR_PROPOSED_ML};

    if (check(mr_spec_new(MR_EXPERIMENT_BER_VS_SNR, &spec), "mr_spec_new")) return 1;
    mr_spec_set_sweep(spec, 0.0, 20.0, 5);
    mr_spec_set_symbols(spec, 20000);
    mr_spec_set_detectors(spec, detectors, 2);
    if (check(mr_run(spec, 0, &results), "mr_run")) return 1;

    printf("molrelay %s\n", mr_version());
    for (size_t i = 0; i < mr_results_len(results); i++) {
        MrBerRow row;
        mr_results_ber_row(results, i, &row);
        printf("%5.1f dB  detector %d  node %c  BER %.3e\n", row.x_value, (int)row.detector,
               row.node == MR_NODE_A ? 'A' : 'B', row.ber);
    }
    mr_results_free(results);
    mr_spec_free(spec);
    return 0;
}
