import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "gaugeforms_project.settings")
django.setup()
