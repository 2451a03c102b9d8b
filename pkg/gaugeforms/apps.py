from django.apps import AppConfig


class GaugeformsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "gaugeforms"
    verbose_name = "Gauge-equivalence of sesquilinear forms"
