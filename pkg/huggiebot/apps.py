from django.apps import AppConfig


class HuggieBotConfig(AppConfig):
    name = 'huggiebot'
    verbose_name = 'HuggieBot hug controller'

    def ready(self):
        from .checks import register_huggiebot_settings_checks
        register_huggiebot_settings_checks()
