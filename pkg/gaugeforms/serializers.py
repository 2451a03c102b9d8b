from rest_framework import serializers

SCHEMA_VERSION = "1.0"
GROUP_CHOICES = ("gl", "sl", "u", "su")


class MatrixTextField(serializers.ListField):
    """A 2×2 array of expression strings."""

    child = serializers.ListField(child=serializers.CharField(trim_whitespace=True))

    def to_internal_value(self, data):
        rows = super().to_internal_value(data)
        if len(rows) != 2 or any(len(row) != 2 for row in rows):
            raise serializers.ValidationError("expected a 2x2 array of expressions")
        return rows


def float_list(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), **kwargs)


def float_matrix(**kwargs):
    return serializers.ListField(child=float_list(), **kwargs)


# --------------------------
# Config blocks
# --------------------------
class ManifoldSerializer(serializers.Serializer):
    """[manifold] block; q_ref only in 4D."""
    dim = serializers.ChoiceField(choices=(3, 4))
    grid = serializers.IntegerField(min_value=8)
    q_ref = float_list(min_length=4, max_length=4, required=False)

    def validate(self, attrs):
        if attrs.get("q_ref") is not None and attrs["dim"] != 4:
            raise serializers.ValidationError({"q_ref": "q_ref is only allowed when dim = 4"})
        return attrs


class SymbolBlockSerializer(serializers.Serializer):
    """[symbol NAME] block; needs exactly E1..Em for the manifold dimension m."""
    E1 = MatrixTextField(required=False)
    E2 = MatrixTextField(required=False)
    E3 = MatrixTextField(required=False)
    E4 = MatrixTextField(required=False)
    F = MatrixTextField()

    def validate(self, attrs):
        dim = self.context["dim"]
        expected = {f"E{a}" for a in range(1, dim + 1)}
        present = {key for key in attrs if key.startswith("E")}
        missing, extra = expected - present, present - expected
        if missing:
            raise serializers.ValidationError(f"missing fields: {', '.join(sorted(missing))}")
        if extra:
            raise serializers.ValidationError(
                f"fields {', '.join(sorted(extra))} not allowed on a {dim}-dimensional manifold"
            )
        return attrs


class GaugeBlockSerializer(serializers.Serializer):
    group = serializers.ChoiceField(choices=GROUP_CHOICES)
    R = MatrixTextField()


class VolumeBlockSerializer(serializers.Serializer):
    c = serializers.CharField()


# --------------------------
# Reports
# --------------------------
class ValidationSerializer(serializers.Serializer):
    valid = serializers.BooleanField()
    hermitian_error_E = serializers.FloatField()
    hermitian_error_F = serializers.FloatField()
    min_frame_det = serializers.FloatField()
    max_trace = serializers.FloatField(allow_null=True)
    problems = serializers.ListField(child=serializers.CharField())


class ChargesSerializer(serializers.Serializer):
    c_top = serializers.IntegerField()
    c_tem = serializers.IntegerField(allow_null=True)
    deviation = serializers.FloatField()


class PotentialsSerializer(serializers.Serializer):
    A_at_origin = float_list()
    periods = float_list()
    electric_range = float_list(allow_null=True)
    massless = serializers.BooleanField()


class AnalyzeReportSerializer(serializers.Serializer):
    """Invariants of a single symbol."""
    schema_version = serializers.CharField()
    kind = serializers.CharField()
    symbol = serializers.CharField()
    dim = serializers.IntegerField()
    grid = serializers.IntegerField()
    validation = ValidationSerializer()
    signature = serializers.CharField(allow_null=True)
    metric_at_origin = float_matrix(allow_null=True)
    rho_range = float_list(allow_null=True)
    potentials = PotentialsSerializer(allow_null=True)
    charges = ChargesSerializer(allow_null=True)
    frame_det_range = float_list(allow_null=True)
    time_field_at_origin = float_list(allow_null=True)
    errors = serializers.ListField(child=serializers.CharField())


class StageSerializer(serializers.Serializer):
    name = serializers.CharField()
    passed = serializers.BooleanField()
    message = serializers.CharField(allow_blank=True)


class PairChargesSerializer(serializers.Serializer):
    c_top = serializers.ListField(child=serializers.IntegerField())
    c_tem = serializers.ListField(child=serializers.IntegerField(allow_null=True))


class SampledGaugeSerializer(serializers.Serializer):
    """Constructed R on every `step`-th grid point per axis, row-major."""
    step = serializers.IntegerField()
    points = float_matrix()
    real = serializers.ListField(child=float_matrix())
    imag = serializers.ListField(child=float_matrix())


class CompareReportSerializer(serializers.Serializer):
    schema_version = serializers.CharField()
    kind = serializers.CharField()
    symbols = serializers.ListField(child=serializers.CharField())
    group = serializers.ChoiceField(choices=GROUP_CHOICES)
    mode = serializers.ChoiceField(choices=("principal", "full"))
    lattice = serializers.ChoiceField(choices=("strict", "half_period"))
    verdict = serializers.ChoiceField(choices=("equivalent", "not_equivalent"))
    failed_stage = serializers.CharField(allow_null=True)
    stages = StageSerializer(many=True)
    charges = PairChargesSerializer()
    conformal_factor = float_list(allow_null=True)
    periods = float_list(allow_null=True)
    monodromy = serializers.ListField(child=serializers.IntegerField(), allow_null=True)
    lift_exists = serializers.BooleanField(allow_null=True)
    phase_winding = serializers.ListField(child=serializers.IntegerField(), allow_null=True)
    residuals = serializers.DictField(child=serializers.FloatField())
    gauge = SampledGaugeSerializer(allow_null=True)


class LiftReportSerializer(serializers.Serializer):
    schema_version = serializers.CharField()
    kind = serializers.CharField()
    symbols = serializers.ListField(child=serializers.CharField())
    conformal = serializers.BooleanField()
    group_error = serializers.FloatField()
    lambda_range = float_list()
    monodromy = serializers.ListField(child=serializers.IntegerField())
    samples = serializers.ListField(child=serializers.IntegerField())
