# Módulo de vistas - Capa de presentación
# Formateo de las respuestas de los comandos para la consola
