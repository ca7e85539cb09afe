#include <stdio.h>
#include <string.h>

#include "chosen_path.h"

int main(void) {
    const uint32_t elements[] = {1, 2, 3, 4, 10, 11, 12, 13};
    const size_t offsets[] = {0, 4, 8};
    CpIndexHandle *index = NULL;
    if (cp_index_build(elements, offsets, 2, 0.5, 0.25, 4, 1, &index) != CP_STATUS_OK) {
        fprintf(stderr, "build: %s\n", cp_last_error());
        return 1;
    }
    const uint32_t q[] = {10, 11, 12, 13};
    CpQueryResult r;
    if (cp_index_query(index, q, 4, &r) != CP_STATUS_OK || !r.found || r.id != 1) {
        fprintf(stderr, "query failed\n");
        return 1;
    }
    const uint32_t bad[] = {2, 1};
    if (cp_index_query(index, bad, 2, &r) != CP_STATUS_UNSORTED_SET || cp_last_error() == NULL) {
        fprintf(stderr, "unsorted query accepted\n");
        return 1;
    }
    cp_index_free(index);
    printf("ok %s %.4f\n", cp_version(), r.similarity);
    return 0;
}
