"""World-frame human/object/scene reconstruction toolkit at desk scale.

Subpackages cover transform algebra (geometry), camera/object motion
disentanglement (trajectory), signed-distance fields (sdf), the articulated
body proxy (skeleton), compositional volume rendering (render), contact
losses and temporal filtering (contact), the two-stage refinement loop
(optimize), the synthetic oracle generator (synth), and evaluation metrics
(metrics). The `hoiscene` CLI ties the pipeline together.
"""

__version__ = "0.1.0"
