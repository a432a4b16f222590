from django.apps import AppConfig


class GraphSpectraConfig(AppConfig):
    name = 'graph_spectra'
    label = 'graph_spectra'
    verbose_name = 'Indefinite graph spectra'
