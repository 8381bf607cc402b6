import hashlib
import json

import yaml
from rest_framework import serializers

from .conf import kernel_setting
from .exceptions import DomainError, FormatError
from .ops.generator import MODES, GeneratorConfig
from .ops.tensor_core import DTYPES


class GeneratorConfigSerializer(serializers.Serializer):
    """
    Validates a generator configuration mapping (YAML file, settings or
    request data); save() returns a GeneratorConfig.
    """

    stage_channels = serializers.ListField(child=serializers.IntegerField(min_value=1),
                                           min_length=1)
    base_height = serializers.IntegerField(min_value=1)
    base_width = serializers.IntegerField(min_value=1)
    num_classes = serializers.IntegerField(min_value=1, max_value=256)
    spade_hidden = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0)
    dtype = serializers.ChoiceField(choices=sorted(DTYPES))
    mode = serializers.ChoiceField(choices=MODES)

    def validate_stage_channels(self, value):
        if any(a < b for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("stage channels must be non-increasing")
        return value

    def create(self, validated_data):
        return GeneratorConfig(**validated_data)


def _errors_text(errors):
    return "; ".join(f"{field}: {' '.join(str(m) for m in messages)}"
                     for field, messages in errors.items())


def build_generator_config(overrides=None):
    """
    Settings defaults updated with overrides, validated.
    """
    data = dict(kernel_setting("GENERATOR"))
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    serializer = GeneratorConfigSerializer(data=data)
    if not serializer.is_valid():
        raise DomainError(f"invalid generator configuration: {_errors_text(serializer.errors)}")
    return serializer.save()


def read_config_file(path):
    """
    The raw mapping of a YAML generator configuration, not yet validated
    """
    try:
        with open(path) as handle:
            data = yaml.safe_load(handle) or {}
    except OSError as exc:
        raise FormatError(f"cannot read configuration: {exc.strerror}", path=path)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        location = f"line {mark.line + 1}, column {mark.column + 1}" if mark else None
        raise FormatError("malformed YAML configuration", path=path, location=location)
    if not isinstance(data, dict):
        raise FormatError("configuration must be a mapping", path=path, location="line 1")
    return data


def load_generator_config(path=None, overrides=None):
    data = read_config_file(path) if path else {}
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    return build_generator_config(data)


def config_mapping(config):
    return GeneratorConfigSerializer(config).data


def config_hash(config):
    canonical = json.dumps(config_mapping(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


class StageStatsSerializer(serializers.Serializer):
    stage = serializers.IntegerField()
    pct_misaligned = serializers.FloatField()
    pct_new = serializers.FloatField()
    n_misaligned = serializers.IntegerField()
    n_new = serializers.IntegerField()
    n_total = serializers.IntegerField()


class StatsRequestSerializer(serializers.Serializer):
    panoptic = serializers.FileField()
    stages = serializers.IntegerField(min_value=1, default=3)
    base_scale = serializers.IntegerField(min_value=2, required=False, allow_null=True)


class SynthesisRequestSerializer(serializers.Serializer):
    """
    Both maps must share their size; the base resolution is derived from
    it and the configured number of stages.
    """

    semantic = serializers.FileField()
    panoptic = serializers.FileField()
    seed = serializers.IntegerField(min_value=0, default=0)
