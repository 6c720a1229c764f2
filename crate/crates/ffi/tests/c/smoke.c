#include <stdio.h>
#include <string.h>

#include "snn.h"

int main(int argc, char **argv) {
    const double pts[] = {0, 0, 3, 4, 6, 8};
    SnnIndex *index = NULL;
    if (snn_index_build(pts, 3, 2, &index) != SNN_STATUS_OK) return 1;

    const double q[] = {3, 4};
    SnnResult *res = NULL;
    if (snn_query_radius(index, q, 2, 5.0, &res) != SNN_STATUS_OK) return 2;
    size_t n = snn_result_len(res);
    const size_t *ids = snn_result_ids(res);
    const double *dists = snn_result_dists(res);
    for (size_t i = 0; i < n; i++) printf("%zu:%g ", ids[i], dists[i]);
    printf("\n");
    snn_result_free(res);

    if (argc > 1) {
        if (snn_index_save(index, argv[1]) != SNN_STATUS_OK) return 3;
    }
    if (snn_query_radius(index, q, 3, 1.0, &res) != SNN_STATUS_DIMENSION_MISMATCH) return 4;
    printf("%s\n", snn_last_error_message());
    snn_index_free(index);
    return 0;
}
