"""Marker-set precision and recall, per group and macro-averaged"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, Mapping, Sequence, Tuple

import pandas as pd

from errors import EmptyReference
from utils.logger import setup_logger

logger = setup_logger('MarkerMetrics')


def compute_set_metrics(predicted: Iterable[str], reference: Iterable[str]) -> Tuple[float, float, float]:
    """(precision, recall, jaccard) of a predicted set against a reference set"""
    predicted = set(predicted)
    reference = set(reference)
    if not reference:
        raise EmptyReference("recall is undefined for an empty reference set")

    hits = len(predicted & reference)
    precision = hits / len(predicted) if predicted else 0.0
    recall = hits / len(reference)
    jaccard = hits / len(predicted | reference)
    return precision, recall, jaccard


@dataclass
class MarkerEvaluation:
    table: pd.DataFrame
    summary: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {'groups': self.table.to_dict(orient='records'), 'summary': self.summary}


def macro_marker_metrics(groups: Mapping[str, Mapping[str, Iterable[str]]], reference: Mapping[str, Iterable[str]],
                         modalities: Sequence[str] = ('rna', 'atac')) -> MarkerEvaluation:
    """Compare the combined marker sets of two modalities with each modality alone.

    Precision is scored on the intersection of the two modalities and recall
    on their union. Groups with no (or an empty) reference set are skipped.
    """
    first, second = modalities
    rows = []

    for group in sorted(groups):
        ref = set(reference.get(group, ()))
        if not ref:
            logger.warning(f"No reference markers for '{group}', skipping")
            continue

        a = set(groups[group].get(first, ()))
        b = set(groups[group].get(second, ()))
        both = a & b
        either = a | b

        p_both, _, _ = compute_set_metrics(both, ref)
        _, r_either, _ = compute_set_metrics(either, ref)
        p_a, r_a, _ = compute_set_metrics(a, ref)
        p_b, r_b, _ = compute_set_metrics(b, ref)

        rows.append({
            'group': group,
            'precision_intersection': p_both,
            f'precision_{first}': p_a,
            f'precision_{second}': p_b,
            'recall_union': r_either,
            f'recall_{first}': r_a,
            f'recall_{second}': r_b,
            'intersection_size': len(both),
            'union_size': len(either),
            'jaccard': len(both) / len(either) if either else 0.0,
        })

    columns = ['group', 'precision_intersection', f'precision_{first}', f'precision_{second}',
               'recall_union', f'recall_{first}', f'recall_{second}', 'intersection_size', 'union_size', 'jaccard']
    table = pd.DataFrame(rows, columns=columns)

    if table.empty:
        return MarkerEvaluation(table=table, summary={'groups': 0})

    precision_wins = (table['precision_intersection'] > table[f'precision_{first}']) & \
                     (table['precision_intersection'] > table[f'precision_{second}'])
    recall_wins = (table['recall_union'] > table[f'recall_{first}']) & \
                  (table['recall_union'] > table[f'recall_{second}'])

    summary = {
        'groups': int(len(table)),
        'macro_precision_intersection': float(table['precision_intersection'].mean()),
        f'macro_precision_{first}': float(table[f'precision_{first}'].mean()),
        f'macro_precision_{second}': float(table[f'precision_{second}'].mean()),
        'macro_recall_union': float(table['recall_union'].mean()),
        f'macro_recall_{first}': float(table[f'recall_{first}'].mean()),
        f'macro_recall_{second}': float(table[f'recall_{second}'].mean()),
        'precision_dominant_groups': int(precision_wins.sum()),
        'recall_dominant_groups': int(recall_wins.sum()),
        'mean_intersection_size': float(table['intersection_size'].mean()),
        'mean_union_size': float(table['union_size'].mean()),
        'mean_jaccard': float(table['jaccard'].mean()),
    }

    logger.info(f"Evaluated {summary['groups']} groups: intersection wins precision in "
                f"{summary['precision_dominant_groups']}, union wins recall in {summary['recall_dominant_groups']}")
    return MarkerEvaluation(table=table, summary=summary)
