"""Task specification model"""

from .task_spec import (Constraints, ResourceRef, TaskSpecification, load_task_spec,
                        parse_task_spec, serialize_task_spec, task_spec_from_dict,
                        validate_constraints)

__all__ = ['Constraints', 'ResourceRef', 'TaskSpecification', 'load_task_spec', 'parse_task_spec',
           'serialize_task_spec', 'task_spec_from_dict', 'validate_constraints']
