from .adfamily import ADFamily, ad_family, verify_ad_family
from .gluing import (GluedSpace, decomposition_ratio, glue, glue_function,
                     orthogonality_constant, restrict_function)
from .retractions import (AuditReport, BlockVector, TailSequence, block_retraction,
                          block_retraction_batch, block_retraction_lipschitz_audit,
                          c0_distance, c0_retract, c0_retract_lipschitz_audit)

__all__ = [
    "ADFamily", "ad_family", "verify_ad_family",
    "GluedSpace", "decomposition_ratio", "glue", "glue_function",
    "orthogonality_constant", "restrict_function",
    "AuditReport", "BlockVector", "TailSequence", "block_retraction",
    "block_retraction_batch", "block_retraction_lipschitz_audit",
    "c0_distance", "c0_retract", "c0_retract_lipschitz_audit",
]
