from django.apps import AppConfig


class SoundingConfig(AppConfig):
    name = "sounding"
    verbose_name = "VUCA channel sounding"
