from green_complexity.src.data.codes import ActivityCode, GreenClassification
from green_complexity.src.data.counting import count_patents
from green_complexity.src.data.matrices import WeightedBipartite, build_matrix, tag_green, tag_patents
from green_complexity.src.data.parsing import (
    IngestReport, PatentRecord, RawRecord, RecordSchema,
    parse_green_list, parse_patents, parse_records, read_records,
)
