import math

from django import forms
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .exceptions import SchemaError
from .models import MODE_CHOICES, PATTERN_CHOICES, PRESET_CHOICES, SCHEMA_VERSION


class ComplexGainField(forms.Field):
    """A complex amplitude given as [re, im] or as a plain real number."""

    default_error_messages = {
        "invalid": _("Enter a [re, im] pair of numbers or a real number."),
        "zero": _("Path gain must be non-zero and finite."),
    }

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, bool):
            raise ValidationError(self.error_messages["invalid"], code="invalid")
        if isinstance(value, (int, float)):
            return complex(value)
        if (
            isinstance(value, (list, tuple))
            and len(value) == 2
            and all(isinstance(part, (int, float)) and not isinstance(part, bool) for part in value)
        ):
            return complex(value[0], value[1])
        raise ValidationError(self.error_messages["invalid"], code="invalid")

    def validate(self, value):
        super().validate(value)
        if value is not None and (
            value == 0 or not (math.isfinite(value.real) and math.isfinite(value.imag))
        ):
            raise ValidationError(self.error_messages["zero"], code="zero")


class VersionedForm(forms.Form):
    version = forms.CharField(required=False)

    def clean_version(self):
        version = self.cleaned_data.get("version")
        if version and version != SCHEMA_VERSION:
            raise ValidationError(
                _("Unsupported schema version %(version)s, expected %(expected)s."),
                params={"version": version, "expected": SCHEMA_VERSION},
            )
        return version or SCHEMA_VERSION


class AntennaPatternForm(forms.Form):
    kind = forms.ChoiceField(choices=PATTERN_CHOICES)
    boresight_gain = forms.FloatField(required=False)
    exponent = forms.FloatField(required=False, min_value=0)
    front_to_back = forms.FloatField(required=False, min_value=0)


class PathForm(forms.Form):
    delay = forms.FloatField(min_value=0)
    azimuth = forms.FloatField()
    gain = ComplexGainField()


class SceneForm(VersionedForm):
    tx_rx_distance = forms.FloatField(required=False, min_value=0)
    noise_floor = forms.FloatField(required=False)

    def clean_noise_floor(self):
        noise_floor = self.cleaned_data.get("noise_floor")
        if noise_floor is not None and noise_floor >= 0:
            raise ValidationError(_("Noise floor must lie below 0 dB."))
        return noise_floor


class SounderConfigForm(forms.Form):
    """Sounder fields; all optional when they override a preset."""

    MANDATORY = (
        "carrier_frequency",
        "bandwidth",
        "rx_sampling_rate",
        "sequence_length",
        "num_virtual_antennas",
        "sequence_duration",
        "vuca_radius",
    )

    carrier_frequency = forms.FloatField(required=False, min_value=0)
    bandwidth = forms.FloatField(required=False, min_value=0)
    rx_sampling_rate = forms.FloatField(required=False, min_value=0)
    sequence_length = forms.IntegerField(required=False, min_value=2)
    num_virtual_antennas = forms.IntegerField(required=False, min_value=1)
    sequence_duration = forms.FloatField(required=False, min_value=0)
    vuca_radius = forms.FloatField(required=False, min_value=0)
    tx_power = forms.FloatField(required=False)
    tx_antenna_gain = forms.FloatField(required=False)
    rx_antenna_gain = forms.FloatField(required=False)
    arc_coverage = forms.FloatField(required=False, min_value=0, max_value=360)
    name = forms.CharField(required=False, max_length=64)

    def __init__(self, *args, complete=False, **kwargs):
        super().__init__(*args, **kwargs)
        if complete:
            for name in self.MANDATORY:
                self.fields[name].required = True


class EvalConfigForm(forms.Form):
    delay_oversampling = forms.IntegerField(required=False, min_value=1)
    freq_window_psl = forms.FloatField(required=False, min_value=0)
    freq_window_alpha = forms.FloatField(required=False, min_value=0)
    spectral_filter_length = forms.IntegerField(required=False, min_value=1)
    spectral_filter_alpha = forms.FloatField(required=False, min_value=0, max_value=1)
    relative_threshold = forms.FloatField(required=False, min_value=0)
    delay_cluster_grid = forms.FloatField(required=False, min_value=0)
    angular_cluster_grid = forms.FloatField(required=False, min_value=0)
    music_grid_resolution = forms.FloatField(required=False, min_value=0)


class ConfigForm(VersionedForm):
    preset = forms.ChoiceField(choices=PRESET_CHOICES, required=False)


class ScenarioForm(ConfigForm):
    name = forms.SlugField(required=False)
    mode = forms.ChoiceField(choices=MODE_CHOICES, required=False)
    seed = forms.IntegerField(required=False, min_value=0)


class TestPointForm(forms.Form):
    name = forms.SlugField()
    distance = forms.FloatField(min_value=0)
    scene_file = forms.CharField(required=False)


def clean_document(form_class, data, path, **form_kwargs):
    """Validate one JSON object; the first problem is reported with its JSON path."""

    if not isinstance(data, dict):
        raise SchemaError(path, "expected an object")
    form = form_class(data, **form_kwargs)
    if not form.is_valid():
        field, errors = next(iter(form.errors.items()))
        location = path if field == "__all__" else f"{path}.{field}"
        raise SchemaError(location, errors[0])
    return {name: value for name, value in form.cleaned_data.items() if value not in (None, "")}
